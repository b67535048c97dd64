//! Lag coefficients `Φ_i` from `(H, F, G)` and the VRW reduced-rank variant.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::MomentMatrices;
use crate::blockops::BlockMatrixG;
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, symmetrize, SpdFactor, RANK_TOL};

fn check_h(h: &DMatrix<f64>, g: &BlockMatrixG) -> Result<()> {
    if h.ncols() != g.structure().n_min() {
        return Err(Error::Dimension(format!(
            "H has {} columns, structure needs {}",
            h.ncols(),
            g.structure().n_min()
        )));
    }
    Ok(())
}

/// `[Φ_1, .., Φ_p]` by summing `H_{j,a} G_{j,j-i-a}` block by block.
pub fn phi_from_hfg(h: &DMatrix<f64>, g: &BlockMatrixG) -> Result<Vec<DMatrix<f64>>> {
    check_h(h, g)?;
    let s = g.structure();
    let mut phi = vec![DMatrix::zeros(h.nrows(), g.m()); s.p()];
    for b in s.blocks() {
        for (i, out) in phi.iter_mut().enumerate().take(b.exponent) {
            let i = i + 1;
            for a in 0..=b.exponent - i {
                let cols = b.position_rows(a);
                *out += h.columns(cols.start, cols.len()) * g.block(b.exponent, b.exponent - i - a);
            }
        }
    }
    Ok(phi)
}

/// `[Φ_1, .., Φ_p]` as `H F^{i-1} G`.
pub fn phi_from_power(h: &DMatrix<f64>, g: &BlockMatrixG) -> Result<Vec<DMatrix<f64>>> {
    check_h(h, g)?;
    let f = g.structure().jordan_matrix();
    let mut hf = h.clone();
    let mut out = Vec::with_capacity(g.structure().p());
    for _ in 0..g.structure().p() {
        out.push(&hf * g.data());
        hf = &hf * &f;
    }
    Ok(out)
}

/// `y_t = Σ_a A_a B(L) x_{t-1-a}` with `B(L) = Σ_s B_s L^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrwCoefficients {
    /// `B_0 .. B_{p2}`, each `d x m`
    #[serde(with = "crate::json::matrix_vec")]
    pub b: Vec<DMatrix<f64>>,
    /// `A_0 .. A_{p1}`, each `k x d`
    #[serde(with = "crate::json::matrix_vec")]
    pub a: Vec<DMatrix<f64>>,
}

impl VrwCoefficients {
    pub fn p1(&self) -> usize {
        self.a.len() - 1
    }

    pub fn p2(&self) -> usize {
        self.b.len() - 1
    }
}

fn check_b(b: &[DMatrix<f64>]) -> Result<(usize, usize)> {
    let first = b
        .first()
        .ok_or_else(|| Error::InvalidInput("B(L) needs at least one coefficient".into()))?;
    let (d, m) = first.shape();
    if b.iter().any(|x| x.shape() != (d, m)) {
        return Err(Error::Dimension("B coefficients differ in shape".into()));
    }
    Ok((d, m))
}

/// Banded matrix whose row block `i` holds `[B_{p2} .. B_0]` from column block `i`.
pub fn vrw_upsilon(b: &[DMatrix<f64>], p1: usize) -> Result<DMatrix<f64>> {
    let (d, m) = check_b(b)?;
    let p2 = b.len() - 1;
    let mut u = DMatrix::zeros((p1 + 1) * d, (p1 + p2 + 1) * m);
    for i in 0..=p1 {
        for t in 0..=p2 {
            u.view_mut((i * d, (i + t) * m), (d, m)).copy_from(&b[p2 - t]);
        }
    }
    Ok(u)
}

fn upsilon_checked(mo: &MomentMatrices, b: &[DMatrix<f64>], p1: usize) -> Result<DMatrix<f64>> {
    let u = vrw_upsilon(b, p1)?;
    if u.ncols() != mo.pm() {
        return Err(Error::Dimension(format!(
            "p1 + p2 + 1 = {} lags of width {} do not match moments of size {}",
            p1 + b.len(),
            b[0].ncols(),
            mo.pm()
        )));
    }
    let d = b[0].nrows();
    let stacked = u.rows(0, d).columns(0, b.len() * b[0].ncols()).clone_owned();
    let (rank, _) = numerical_rank(&stacked, RANK_TOL);
    if rank < d {
        return Err(Error::RankDeficient {
            what: "[B_p2 .. B_0]",
            rank,
            expected: d,
        });
    }
    Ok(u)
}

fn quad(u: &DMatrix<f64>, mom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut q = u * mom * u.transpose();
    symmetrize(&mut q);
    q
}

/// Concentrated objective with `υ(B)` in place of `κ(G)`.
pub fn vrw_neg_log_lik(mo: &MomentMatrices, b: &[DMatrix<f64>], p1: usize) -> Result<f64> {
    let u = upsilon_checked(mo, b, p1)?;
    let fb = SpdFactor::new(&quad(&u, &mo.b), "υBυ'")?;
    let fa = SpdFactor::new(&quad(&u, &mo.a), "υAυ'").map_err(|e| Error::Domain(e.to_string()))?;
    Ok(fa.log_det() - fb.log_det())
}

/// Least-squares `[A_0 .. A_{p1}]` given `B(L)`.
pub fn vrw_optimal_a(mo: &MomentMatrices, b: &[DMatrix<f64>], p1: usize) -> Result<Vec<DMatrix<f64>>> {
    let u = upsilon_checked(mo, b, p1)?;
    let fb = SpdFactor::new(&quad(&u, &mo.b), "υBυ'")?;
    let h = &mo.yx * u.transpose() * fb.inverse();
    let d = b[0].nrows();
    Ok((0..=p1)
        .map(|deg| h.columns((p1 - deg) * d, d).clone_owned())
        .collect())
}
