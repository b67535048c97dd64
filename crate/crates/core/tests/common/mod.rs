#![allow(dead_code)]

use minvarx::blockops::BlockMatrixG;
use minvarx::likelihood::{build_lag_data, LagDataset, MomentMatrices};
use minvarx::StructureParams;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal))
}

/// Random d-vector with `d_p > 0` and total at most `h`.
pub fn structure(r: &mut ChaCha8Rng, h: usize, p: usize) -> StructureParams {
    let mut d = vec![0; p];
    d[p - 1] = r.random_range(1..=h);
    let mut left = h - d[p - 1];
    for slot in d.iter_mut().take(p - 1) {
        let x = r.random_range(0..=left);
        *slot = x;
        left -= x;
    }
    StructureParams::from_dvec(&d).unwrap()
}

pub fn g(r: &mut ChaCha8Rng, s: &StructureParams, m: usize) -> BlockMatrixG {
    BlockMatrixG::new(s.clone(), normal(r, s.n_min(), m)).unwrap()
}

/// Noise-driven exogenous regression with some lag signal.
pub fn dataset(r: &mut ChaCha8Rng, k: usize, m: usize, p: usize, t: usize) -> LagDataset {
    let x = normal(r, m, t + p);
    let mut y = normal(r, k, t + p);
    let coefs: Vec<DMatrix<f64>> = (0..p).map(|_| normal(r, k, m) * 0.5).collect();
    for s in p..t + p {
        for (i, c) in coefs.iter().enumerate() {
            let add = c * x.column(s - 1 - i);
            let mut col = y.column_mut(s);
            col += add;
        }
    }
    build_lag_data(&x, &y, p).unwrap()
}

pub fn moments(r: &mut ChaCha8Rng, k: usize, m: usize, p: usize, t: usize) -> MomentMatrices {
    MomentMatrices::from_data(&dataset(r, k, m, p, t)).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

/// Like [`g`], redrawn until `G_{:,0}` is comfortably far from losing rank.
pub fn well_posed_g(r: &mut ChaCha8Rng, s: &StructureParams, m: usize) -> BlockMatrixG {
    loop {
        let g = g(r, s, m);
        let sv = g.g0().singular_values();
        if sv.min() >= 0.2 * sv.max() && sv.min() >= 0.2 {
            return g;
        }
    }
}
