//! Coordinates `(C, O)` for normalized `G_o`.
//!
//! `O` stacks `G_o_{:,0}` on an orthonormal completion `O_⊥`. Each higher
//! block is `G_o_{r,l} = C_{r,l} [O_{r-l-1,0}; ..; O_{1,0}; O_⊥]`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, RowDVector};
use serde::{Deserialize, Serialize};

use super::BlockMatrixG;
use crate::error::{Error, Result};
use crate::structure::StructureParams;

const ORTHO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoParam {
    pub structure: StructureParams,
    #[serde(rename = "O", with = "crate::json::matrix")]
    pub o: DMatrix<f64>,
    /// `C_{r,l}` keyed by `(r, l)`, `1 <= l <= r - 1`.
    #[serde(rename = "C", with = "c_map")]
    pub c: BTreeMap<(usize, usize), DMatrix<f64>>,
}

mod c_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        r: usize,
        l: usize,
        #[serde(with = "crate::json::matrix")]
        value: DMatrix<f64>,
    }

    pub fn serialize<S: Serializer>(
        c: &BTreeMap<(usize, usize), DMatrix<f64>>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = c
            .iter()
            .map(|(&(r, l), v)| Entry { r, l, value: v.clone() })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<(usize, usize), DMatrix<f64>>, D::Error> {
        Ok(Vec::<Entry>::deserialize(d)?
            .into_iter()
            .map(|e| ((e.r, e.l), e.value))
            .collect())
    }
}

/// Row offset of `O_{r,0}` inside `O` and the start of `O_⊥`.
fn o_offsets(s: &StructureParams) -> (BTreeMap<usize, usize>, usize) {
    let mut map = BTreeMap::new();
    let mut off = 0;
    for b in s.blocks() {
        map.insert(b.exponent, off);
        off += b.sub_rank;
    }
    (map, off)
}

/// Rows of `O` spanning `G_o_{r,l}`: exponents `r-l-1` down to `1`, then `O_⊥`.
fn basis_rows(s: &StructureParams, r: usize, l: usize, m: usize) -> Vec<usize> {
    let (offs, ell) = o_offsets(s);
    let mut rows = Vec::new();
    for e in (1..r - l).rev() {
        if let Some(&o) = offs.get(&e) {
            rows.extend(o..o + s.d(e));
        }
    }
    rows.extend(ell..m);
    rows
}

fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Extend orthonormal rows to an orthonormal basis of `R^m`, adding canonical
/// vectors greedily by largest residual (ties to the lowest index).
pub(crate) fn complete_basis(rows: &DMatrix<f64>) -> DMatrix<f64> {
    let m = rows.ncols();
    let mut basis: Vec<RowDVector<f64>> = rows.row_iter().map(|r| r.clone_owned()).collect();
    while basis.len() < m {
        let mut best: Option<(f64, RowDVector<f64>)> = None;
        for i in 0..m {
            let mut v = RowDVector::zeros(m);
            v[i] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    let dot = v.dot(b);
                    v -= b * dot;
                }
            }
            let n = v.norm();
            if best.as_ref().is_none_or(|(bn, _)| n > *bn + 1e-12) {
                best = Some((n, v / n));
            }
        }
        basis.push(best.expect("m > 0").1);
    }
    DMatrix::from_rows(&basis)
}

/// Coordinates of a normalized `G_o`.
pub fn parameterize(g_o: &BlockMatrixG) -> Result<OrthoParam> {
    let s = g_o.structure().clone();
    let m = g_o.m();
    let g0 = g_o.g0();
    let ell = g0.nrows();
    if ell > m {
        return Err(Error::Dimension(format!("𝔩 = {ell} exceeds m = {m}")));
    }
    let gram_err = (&g0 * g0.transpose() - DMatrix::identity(ell, ell)).amax();
    if gram_err > ORTHO_TOL {
        return Err(Error::InvalidInput(format!(
            "G_o_{{:,0}} rows are not orthonormal (residual {gram_err:e})"
        )));
    }
    let o = complete_basis(&g0);
    let mut c = BTreeMap::new();
    for b in s.blocks() {
        for l in 1..b.exponent {
            let basis = select_rows(&o, &basis_rows(&s, b.exponent, l, m));
            let gl = g_o.block(b.exponent, l).clone_owned();
            let coef = &gl * basis.transpose();
            let resid = (&coef * &basis - &gl).amax();
            if resid > ORTHO_TOL * gl.amax().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "G_o_{{{},{l}}} violates the orthogonality relations (residual {resid:e})",
                    b.exponent
                )));
            }
            c.insert((b.exponent, l), coef);
        }
    }
    Ok(OrthoParam { structure: s, o, c })
}

/// Rebuild `G_o` from its coordinates.
pub fn reconstruct(param: &OrthoParam) -> Result<BlockMatrixG> {
    let s = &param.structure;
    let m = param.o.nrows();
    if param.o.ncols() != m {
        return Err(Error::Dimension("O must be square".into()));
    }
    let err = (&param.o * param.o.transpose() - DMatrix::identity(m, m)).amax();
    if err > ORTHO_TOL {
        return Err(Error::InvalidInput(format!("O is not orthogonal (residual {err:e})")));
    }
    s.validate_for(m, m)?;
    let (offs, _) = o_offsets(s);
    let mut g = BlockMatrixG::zeros(s.clone(), m);
    for b in s.blocks() {
        let rows0 = b.label_rows(0);
        let o0 = param.o.rows(offs[&b.exponent], b.sub_rank).clone_owned();
        g.data_mut().rows_mut(rows0.start, b.sub_rank).copy_from(&o0);
        for l in 1..b.exponent {
            let basis_idx = basis_rows(s, b.exponent, l, m);
            let coef = param.c.get(&(b.exponent, l)).ok_or_else(|| {
                Error::InvalidInput(format!("missing C_{{{},{l}}}", b.exponent))
            })?;
            if coef.shape() != (b.sub_rank, basis_idx.len()) {
                return Err(Error::Dimension(format!(
                    "C_{{{},{l}}} is {:?}, expected {:?}",
                    b.exponent,
                    coef.shape(),
                    (b.sub_rank, basis_idx.len())
                )));
            }
            let rows = b.label_rows(l);
            let block = coef * select_rows(&param.o, &basis_idx);
            g.data_mut().rows_mut(rows.start, b.sub_rank).copy_from(&block);
        }
    }
    Ok(g)
}
