//! Generalized LQ normalization across all lags.
//!
//! Given `G` with `rank(G_{:,0}) = 𝔩`, find an invertible `S` in the centralizer
//! of `F` so that `G_o = S G` has orthonormal `G_o_{:,0}` and every
//! `G_o_{ρ,l}` (`l >= 1`) orthogonal to `G_o_{ρ1,0}` whenever `ρ1 >= ρ - l`.
//!
//! The diagonal-level walls come from an LQ factorization `G_{:,0} = L W0`.
//! Higher levels are solved one at a time, since each level only depends on
//! walls of strictly lower level.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::centralizer::{CentralizerElement, WallKey};
use super::BlockMatrixG;
use crate::error::{Error, Result};
use crate::linalg::{lower_triangular_inverse, lq, numerical_rank, RANK_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqFactorization {
    #[serde(rename = "S")]
    pub s: CentralizerElement,
    #[serde(rename = "G_o")]
    pub g_o: BlockMatrixG,
}

impl LqFactorization {
    /// Flip signs per row of each `G_o_{r,0}` (and the matching rows of every
    /// `G_o_{r,l}` and of `S`) so that the first nonzero entry is positive.
    pub fn with_positive_signs(mut self) -> Self {
        let s = self.g_o.structure().clone();
        let mut flips: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
        for b in s.blocks() {
            let g0 = self.g_o.block(b.exponent, 0);
            let scale = g0.amax();
            let f: Vec<bool> = (0..b.sub_rank)
                .map(|i| {
                    g0.row(i)
                        .iter()
                        .find(|v| v.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE))
                        .is_some_and(|v| *v < 0.0)
                })
                .collect();
            flips.insert(b.exponent, f);
        }
        self.flip_rows(&flips);
        self
    }

    /// Negate row `i` of every sub-block of exponent `r` where `flips[r][i]`,
    /// together with the matching rows of `S`.
    fn flip_rows(&mut self, flips: &BTreeMap<usize, Vec<bool>>) {
        let s = self.g_o.structure().clone();
        for b in s.blocks() {
            let f = &flips[&b.exponent];
            for q in 0..b.exponent {
                let rows = b.position_rows(q);
                for (i, &flip) in f.iter().enumerate() {
                    if flip {
                        self.g_o.data_mut().row_mut(rows.start + i).neg_mut();
                    }
                }
            }
        }
        let keys: Vec<WallKey> = self.s.walls().keys().copied().collect();
        for key in keys {
            let f = &flips[&key.0];
            let w = self.s.wall_mut(key).expect("existing key");
            for (i, &flip) in f.iter().enumerate() {
                if flip {
                    w.row_mut(i).neg_mut();
                }
            }
        }
    }
}

/// Normalize `G` so its blocks satisfy the orthogonality relations.
///
/// When `G_{:,0}` is badly conditioned one pass leaves visible round-off, so
/// a second pass is applied to the result with its signs matched to the first.
pub fn lq_multi_lag(g: &BlockMatrixG) -> Result<LqFactorization> {
    let first = single_pass(g)?;
    let before = orthogonality_residual(&first.g_o);
    if before <= REFINE_ABOVE {
        return Ok(first);
    }
    let Ok(mut second) = single_pass(&first.g_o) else {
        return Ok(first);
    };
    // the second pass is close to a sign matrix; undo the signs
    let flips: BTreeMap<usize, Vec<bool>> = g
        .structure()
        .blocks()
        .iter()
        .map(|b| {
            let d = second.s.wall((b.exponent, 0, b.exponent)).expect("diagonal wall");
            (b.exponent, (0..b.sub_rank).map(|i| d[(i, i)] < 0.0).collect())
        })
        .collect();
    second.flip_rows(&flips);
    if orthogonality_residual(&second.g_o) >= before {
        return Ok(first);
    }
    match second.s.compose(&first.s) {
        Ok(s) => Ok(LqFactorization { s, g_o: second.g_o }),
        Err(_) => Ok(first),
    }
}

const REFINE_ABOVE: f64 = 1e-13;

fn single_pass(g: &BlockMatrixG) -> Result<LqFactorization> {
    let s = g.structure().clone();
    let g0 = g.g0();
    let ell = s.rank_alloc();
    let (rank, _) = numerical_rank(&g0, RANK_TOL);
    if rank < ell || g0.nrows() > g0.ncols() {
        return Err(Error::RankDeficient {
            what: "G_{:,0}",
            rank,
            expected: ell,
        });
    }
    let (l, w0) = lq(&g0);
    let linv = lower_triangular_inverse(&l)?;

    // offsets of each exponent's rows inside G_{:,0}
    let mut g0_offset = BTreeMap::new();
    let mut off = 0;
    for b in s.blocks() {
        g0_offset.insert(b.exponent, off);
        off += b.sub_rank;
    }

    let mut walls: BTreeMap<WallKey, DMatrix<f64>> = BTreeMap::new();
    for b1 in s.blocks() {
        for b2 in s.blocks() {
            if b2.exponent >= b1.exponent {
                let (r, c) = (g0_offset[&b1.exponent], g0_offset[&b2.exponent]);
                walls.insert(
                    (b1.exponent, 0, b2.exponent),
                    linv.view((r, c), (b1.sub_rank, b2.sub_rank)).clone_owned(),
                );
            }
        }
    }

    let m = g.m();
    for j in 1..s.p() {
        for b in s.blocks().iter().filter(|b| b.exponent > j) {
            let rho = b.exponent;
            let mut k = DMatrix::zeros(b.sub_rank, m);
            for b2 in s.blocks() {
                for j2 in 1..b2.exponent.min(j + 1) {
                    if let Some(w) = walls.get(&(rho, j - j2, b2.exponent)) {
                        k += w * g.block(b2.exponent, j2);
                    }
                }
            }
            // exponents >= rho - j lead G_{:,0}
            let sub: Vec<_> = s.blocks().iter().filter(|b2| b2.exponent + j >= rho).collect();
            let n_sub: usize = sub.iter().map(|b2| b2.sub_rank).sum();
            let l_sub = l.view((0, 0), (n_sub, n_sub)).clone_owned();
            let l_sub_inv = lower_triangular_inverse(&l_sub)?;
            let x = -(&k * w0.rows(0, n_sub).transpose()) * l_sub_inv;
            let mut col = 0;
            for b2 in sub {
                walls.insert(
                    (rho, j, b2.exponent),
                    x.columns(col, b2.sub_rank).clone_owned(),
                );
                col += b2.sub_rank;
            }
        }
    }

    let s_elem = CentralizerElement::from_walls(s, walls)?;
    let g_o = g.with_data(s_elem.realize() * g.data())?;
    Ok(LqFactorization { s: s_elem, g_o })
}

/// Largest violation of the orthonormality and cross-lag orthogonality
/// relations that a normalized `G_o` must satisfy.
pub fn orthogonality_residual(g_o: &BlockMatrixG) -> f64 {
    let s = g_o.structure();
    let g0 = g_o.g0();
    let ell = g0.nrows();
    let mut worst = (&g0 * g0.transpose() - DMatrix::identity(ell, ell)).amax();
    for b in s.blocks() {
        for l in 1..b.exponent {
            let gl = g_o.block(b.exponent, l);
            for b1 in s.blocks().iter().filter(|b1| b1.exponent + l >= b.exponent) {
                let prod = gl * g_o.block(b1.exponent, 0).transpose();
                worst = worst.max(prod.amax());
            }
        }
    }
    worst
}
