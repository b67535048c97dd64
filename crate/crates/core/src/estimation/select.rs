//! Fitting a family of structures and ranking them by an information criterion.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_model, full_ols_from_moments, FitOptions, FitResult};
use crate::blockops::{lq_multi_lag, BlockMatrixG};
use crate::error::{Error, Result};
use crate::likelihood::{ConcentratedModel, LagDataset, MomentMatrices};
use crate::structure::{enumerate_structures, StructureParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "aic")]
    Aic,
    #[serde(rename = "bic")]
    Bic,
    /// Fitted objective minus the full least-squares objective.
    #[serde(rename = "llk-gap")]
    LlkGap,
}

/// `penalty * (pmk - reduction + k(k+1)/2) + T * llk`, with penalty 2 (AIC) or `ln T` (BIC).
pub fn information_criterion(
    criterion: Criterion,
    neg_log_lik: f64,
    t: usize,
    k: usize,
    m: usize,
    p: usize,
    reduction: usize,
    ols_neg_log_lik: f64,
) -> f64 {
    let params = (p * m * k - reduction + k * (k + 1) / 2) as f64;
    match criterion {
        Criterion::Aic => 2.0 * params + t as f64 * neg_log_lik,
        Criterion::Bic => (t as f64).ln() * params + t as f64 * neg_log_lik,
        Criterion::LlkGap => neg_log_lik - ols_neg_log_lik,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub structure: StructureParams,
    pub n_min: usize,
    pub param_reduction: usize,
    pub free_params: usize,
    #[serde(with = "crate::json::fixed_opt")]
    pub neg_log_lik: Option<f64>,
    #[serde(with = "crate::json::fixed_opt")]
    pub criterion: Option<f64>,
    pub converged: bool,
    pub diverged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub criterion: Criterion,
    pub p: usize,
    pub k: usize,
    pub m: usize,
    pub n_samples: usize,
    #[serde(with = "crate::json::fixed")]
    pub full_ols_neg_log_lik: f64,
    /// Ascending by criterion; failed fits last.
    pub rows: Vec<SelectionRow>,
}

/// Lift a fitted `G` to a structure that contains it. Existing rows keep their
/// place, extra `G_{r,0}` rows come from the orthogonal complement of
/// `G_{:,0}` and extra higher rows are zero, so `κ` gains rows without losing
/// any and the objective can only go down.
pub(crate) fn embed(g: &BlockMatrixG, target: &StructureParams) -> Result<BlockMatrixG> {
    let src = g.structure();
    if !src.is_nested_in(target) || src.p() != target.p() {
        return Err(Error::InvalidStructure(format!("{src} is not nested in {target}")));
    }
    let g = lq_multi_lag(g)?.g_o;
    let m = g.m();
    let basis = crate::blockops::complete_basis(&g.g0());
    let mut next = src.rank_alloc();
    let mut out = DMatrix::zeros(target.n_min(), m);
    for tb in target.blocks() {
        let have = src.d(tb.exponent);
        for j in 0..tb.exponent {
            let rows = tb.label_rows(j);
            if have > 0 {
                out.rows_mut(rows.start, have).copy_from(&g.block(tb.exponent, j));
            }
            if j == 0 {
                for extra in have..tb.sub_rank {
                    out.row_mut(rows.start + extra).copy_from(&basis.row(next));
                    next += 1;
                }
            }
        }
    }
    BlockMatrixG::new(target.clone(), out)
}

/// Fit every structure and keep the individual results.
pub fn select_with_fits(
    data: &LagDataset,
    p: usize,
    criterion: Criterion,
    opts: &FitOptions,
    subset: Option<&[StructureParams]>,
) -> Result<(SelectionReport, Vec<(StructureParams, Result<FitResult>)>)> {
    opts.validate()?;
    if data.p != p {
        return Err(Error::Dimension(format!("data lagged with p = {} but p = {p} requested", data.p)));
    }
    let mo = MomentMatrices::from_data(data)?;
    let (k, m, t) = (mo.k(), mo.m(), mo.t);
    let ols = full_ols_from_moments(&mo)?;
    let structures: Vec<StructureParams> = match subset {
        Some(s) => s.to_vec(),
        None => enumerate_structures(k.min(m), p),
    };
    for s in &structures {
        if s.p() != p {
            return Err(Error::InvalidStructure(format!("{s} does not have maximal lag {p}")));
        }
        s.validate_for(k, m)?;
    }

    // smaller McMillan degree first so every nested predecessor is done
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in structures.iter().enumerate() {
        groups.entry(s.n_min()).or_default().push(i);
    }
    let mut fits: Vec<Option<Result<FitResult>>> = vec![None; structures.len()];
    for idx in groups.values() {
        let done: Vec<(usize, f64, BlockMatrixG)> = fits
            .iter()
            .enumerate()
            .filter_map(|(i, f)| match f {
                Some(Ok(r)) if r.neg_log_lik.is_finite() => Some((i, r.neg_log_lik, r.g.clone())),
                _ => None,
            })
            .collect();
        let batch: Vec<(usize, Result<FitResult>)> = idx
            .par_iter()
            .map(|&i| {
                let s = &structures[i];
                let warm: Vec<BlockMatrixG> = done
                    .iter()
                    .filter(|(j, _, _)| structures[*j] != *s && structures[*j].is_nested_in(s))
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                    .and_then(|(_, _, g)| embed(g, s).ok())
                    .into_iter()
                    .collect();
                let res = ConcentratedModel::new(s.clone(), mo.clone())
                    .and_then(|model| fit_model(&model, t, data.autoregressive, warm, opts));
                (i, res)
            })
            .collect();
        for (i, r) in batch {
            fits[i] = Some(r);
        }
    }

    let mut rows: Vec<SelectionRow> = structures
        .iter()
        .zip(&fits)
        .map(|(s, f)| {
            let reduction = s.param_reduction(k, m).expect("validated");
            let base = SelectionRow {
                structure: s.clone(),
                n_min: s.n_min(),
                param_reduction: reduction,
                free_params: p * m * k - reduction,
                neg_log_lik: None,
                criterion: None,
                converged: false,
                diverged: false,
                error: None,
            };
            match f.as_ref().expect("every structure fitted") {
                Ok(r) => SelectionRow {
                    neg_log_lik: Some(r.neg_log_lik),
                    criterion: Some(information_criterion(
                        criterion,
                        r.neg_log_lik,
                        t,
                        k,
                        m,
                        p,
                        reduction,
                        ols.neg_log_lik,
                    )),
                    converged: r.converged,
                    diverged: r.diverged,
                    ..base
                },
                Err(e) => SelectionRow {
                    error: Some(e.to_string()),
                    ..base
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| match (a.criterion, b.criterion) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let report = SelectionReport {
        criterion,
        p,
        k,
        m,
        n_samples: t,
        full_ols_neg_log_lik: ols.neg_log_lik,
        rows,
    };
    let fits = structures
        .into_iter()
        .zip(fits)
        .map(|(s, f)| (s, f.expect("every structure fitted")))
        .collect();
    Ok((report, fits))
}

/// Fit every structure (all of them for `min(k, m)` and `p`, or `subset`) and rank them.
pub fn select_structure(
    data: &LagDataset,
    p: usize,
    criterion: Criterion,
    opts: &FitOptions,
    subset: Option<&[StructureParams]>,
) -> Result<SelectionReport> {
    select_with_fits(data, p, criterion, opts, subset).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::build_lag_data;

    #[test]
    fn embed_keeps_objective_from_increasing() {
        let mut st = 5u64;
        let x = DMatrix::from_fn(3, 63, |_, _| {
            st = st.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((st >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        });
        let d = build_lag_data(&x, &x, 2).unwrap();
        let mo = MomentMatrices::from_data(&d).unwrap();
        let small = StructureParams::from_dvec(&[0, 1]).unwrap();
        let big = StructureParams::from_dvec(&[1, 1]).unwrap();
        let g = super::super::random_start(&small, 3, 1, 0).unwrap();
        let e = embed(&g, &big).unwrap();
        let f_small = ConcentratedModel::new(small, mo.clone()).unwrap().neg_log_lik(&g).unwrap();
        let f_big = ConcentratedModel::new(big, mo).unwrap().neg_log_lik(&e).unwrap();
        assert!(f_big <= f_small + 1e-12);
    }

    #[test]
    fn criteria_formulas() {
        let v = information_criterion(Criterion::Aic, -0.5, 100, 2, 3, 1, 2, -1.0);
        assert_eq!(v, 2.0 * (6.0 - 2.0 + 3.0) - 50.0);
        let b = information_criterion(Criterion::Bic, -0.5, 100, 2, 3, 1, 2, -1.0);
        assert!((b - ((100f64).ln() * 7.0 - 50.0)).abs() < 1e-12);
        assert_eq!(information_criterion(Criterion::LlkGap, -0.5, 100, 2, 3, 1, 2, -1.0), 0.5);
    }
}
