//! Exhaustive scan over the circle for two regressors.
//!
//! With `m = 2` a normalized `G_{:,0}` is `v = (cos t, sin t)` (plus
//! `w = (-sin t, cos t)` when `𝔩 = 2`), and every higher block is a multiple
//! of `w` or zero. The scan grids `t` over `[0, π)` and minimizes the
//! remaining coefficients at each point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::blockops::BlockMatrixG;
use crate::error::{Error, Result};
use crate::likelihood::ConcentratedModel;
use crate::structure::StructureParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub structure: StructureParams,
    /// Grid of angles in `[0, π)`.
    pub t: Vec<f64>,
    /// Objective minimized over the tangent coefficients at each angle.
    pub values: Vec<f64>,
    /// Minimizing tangent coefficients at each angle (empty rows for the bare circle).
    pub coefs: Vec<Vec<f64>>,
    #[serde(with = "crate::json::fixed")]
    pub best_t: f64,
    #[serde(with = "crate::json::fixed")]
    pub best_value: f64,
    pub best_g: BlockMatrixG,
}

/// Rows of `G` that carry a free multiple of `w`.
fn free_rows(s: &StructureParams) -> Result<Vec<usize>> {
    let pairs = s.pairs();
    let unsupported = || {
        Error::Unsupported(format!(
            "grid scan handles [(p, 1)] and [(p, 1), (ρ, 1)] only, got {s}"
        ))
    };
    if pairs.iter().any(|&(_, l)| l != 1) || pairs.len() > 2 {
        return Err(unsupported());
    }
    let p = s.p();
    let top = s.block(p).expect("p present");
    let upto = match pairs.get(1) {
        None => p,
        Some(&(rho, _)) => p - rho,
    };
    Ok((1..upto).map(|l| top.label_rows(l).start).collect())
}

fn base(s: &StructureParams, t: f64) -> (DMatrix<f64>, [f64; 2]) {
    let (v, w) = ([t.cos(), t.sin()], [-t.sin(), t.cos()]);
    let mut g = DMatrix::zeros(s.n_min(), 2);
    for (i, b) in s.blocks().iter().enumerate() {
        let r = b.label_rows(0).start;
        let row = if i == 0 { v } else { w };
        g[(r, 0)] = row[0];
        g[(r, 1)] = row[1];
    }
    (g, w)
}

struct Slice<'a> {
    model: &'a ConcentratedModel,
    base: DMatrix<f64>,
    dirs: Vec<DMatrix<f64>>,
}

impl<'a> Slice<'a> {
    fn new(model: &'a ConcentratedModel, rows: &[usize], t: f64) -> Self {
        let s = model.structure();
        let (base, w) = base(s, t);
        let dirs = rows
            .iter()
            .map(|&r| {
                let mut e = DMatrix::zeros(s.n_min(), 2);
                e[(r, 0)] = w[0];
                e[(r, 1)] = w[1];
                e
            })
            .collect();
        Slice { model, base, dirs }
    }

    fn at(&self, c: &DVector<f64>) -> BlockMatrixG {
        let mut d = self.base.clone();
        for (ci, e) in c.iter().zip(&self.dirs) {
            d += e * *ci;
        }
        BlockMatrixG::new(self.model.structure().clone(), d).expect("shape fixed")
    }

    fn value(&self, c: &DVector<f64>) -> f64 {
        self.model.neg_log_lik(&self.at(c)).unwrap_or(f64::NAN)
    }

    /// Damped Newton in the coefficients; `G` is linear in them.
    fn minimize(&self, mut c: DVector<f64>) -> (DVector<f64>, f64) {
        let q = self.dirs.len();
        let mut f = self.value(&c);
        if q == 0 || !f.is_finite() {
            return (c, f);
        }
        for _ in 0..100 {
            let Ok(ev) = self.model.evaluate(&self.at(&c)) else { break };
            let grad_g = ev.gradient();
            let gc = DVector::from_fn(q, |i, _| grad_g.dot(&self.dirs[i]));
            if gc.amax() < 1e-11 {
                break;
            }
            let hc = DMatrix::from_fn(q, q, |i, j| ev.hessian_bilinear(&self.dirs[i], &self.dirs[j]));
            let eig = hc.symmetric_eigen();
            let mut dir = DVector::zeros(q);
            for (i, &lam) in eig.eigenvalues.iter().enumerate() {
                let v = eig.eigenvectors.column(i);
                dir -= v * (v.dot(&gc) / lam.abs().max(1e-12));
            }
            let mut moved = false;
            for d in [dir, -gc.clone()] {
                let slope = gc.dot(&d);
                let mut alpha = 1.0;
                for _ in 0..50 {
                    let cand = &c + &d * alpha;
                    let fc = self.value(&cand);
                    if fc.is_finite() && fc <= f + 1e-4 * alpha * slope {
                        c = cand;
                        f = fc;
                        moved = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if moved {
                    break;
                }
            }
            if !moved {
                break;
            }
        }
        (c, f)
    }
}

/// Scan `n` equally spaced angles; `m` must be 2.
pub fn scan(model: &ConcentratedModel, n: usize) -> Result<ScanResult> {
    let s = model.structure().clone();
    if model.m() != 2 {
        return Err(Error::Unsupported(format!("grid scan needs m = 2, got m = {}", model.m())));
    }
    if n == 0 {
        return Err(Error::InvalidInput("scan needs at least one grid point".into()));
    }
    let rows = free_rows(&s)?;
    let q = rows.len();
    let mut prev = DVector::zeros(q);
    let mut ts = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut coefs = Vec::with_capacity(n);
    let mut best: Option<(f64, f64, BlockMatrixG)> = None;
    for i in 0..n {
        let t = std::f64::consts::PI * i as f64 / n as f64;
        let slice = Slice::new(model, &rows, t);
        let mut starts = vec![DVector::zeros(q), prev.clone()];
        if q == 1 {
            let coarse = (0..31)
                .map(|j| -1.5 + 0.1 * j as f64)
                .map(|phi| DVector::from_element(1, phi.tan()))
                .min_by(|a, b| slice.value(a).total_cmp(&slice.value(b)))
                .expect("non-empty");
            starts.push(coarse);
        }
        let (c, f) = starts
            .into_iter()
            .map(|c0| slice.minimize(c0))
            .filter(|(_, f)| f.is_finite())
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((DVector::zeros(q), f64::NAN));
        if f.is_finite() {
            prev = c.clone();
            if best.as_ref().is_none_or(|(bv, _, _)| f < *bv) {
                best = Some((f, t, slice.at(&c)));
            }
        }
        ts.push(t);
        values.push(f);
        coefs.push(c.iter().copied().collect());
    }
    let (best_value, best_t, best_g) = best.ok_or_else(|| Error::Domain("objective undefined on the whole grid".into()))?;
    Ok(ScanResult {
        structure: s,
        t: ts,
        values,
        coefs,
        best_t,
        best_value,
        best_g,
    })
}

/// Objective on the `(t, c)` plane for structures with a single tangent
/// coefficient. Rows are `(t, c, value)`, `t` major.
pub fn scan_surface(model: &ConcentratedModel, n_t: usize, c_values: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    if model.m() != 2 {
        return Err(Error::Unsupported(format!("grid scan needs m = 2, got m = {}", model.m())));
    }
    let rows = free_rows(model.structure())?;
    if rows.len() != 1 {
        return Err(Error::Unsupported(format!(
            "surface scan needs exactly one tangent coefficient, {} has {}",
            model.structure(),
            rows.len()
        )));
    }
    if n_t == 0 || c_values.is_empty() {
        return Err(Error::InvalidInput("surface scan needs a non-empty grid".into()));
    }
    let mut out = Vec::with_capacity(n_t * c_values.len());
    for i in 0..n_t {
        let t = std::f64::consts::PI * i as f64 / n_t as f64;
        let slice = Slice::new(model, &rows, t);
        for &c in c_values {
            out.push((t, c, slice.value(&DVector::from_element(1, c))));
        }
    }
    Ok(out)
}
