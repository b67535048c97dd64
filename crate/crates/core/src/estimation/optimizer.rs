//! Local minimization of the concentrated objective over `G`.

use nalgebra::{DMatrix, DVector};

use crate::blockops::{lq_multi_lag, BlockMatrixG};
use crate::error::Result;
use crate::likelihood::ConcentratedModel;
use crate::linalg::{row_major, symmetrize};

const RENORMALIZE_EVERY: usize = 20;
const DIVERGENCE_BOUND: f64 = 1e8;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StepRule {
    Gradient,
    Newton,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub g: BlockMatrixG,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub rule: StepRule,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub normalize: bool,
}

fn normalized(g: &BlockMatrixG) -> Option<BlockMatrixG> {
    lq_multi_lag(g).ok().map(|f| f.with_positive_signs().g_o)
}

fn from_vec(template: &BlockMatrixG, v: &DVector<f64>) -> BlockMatrixG {
    let (n, m) = template.data().shape();
    template
        .with_data(DMatrix::from_row_slice(n, m, v.as_slice()))
        .expect("same shape")
}

/// Newton direction from the eigen-decomposition of the Hessian: negative
/// curvature is flipped, near-null directions (the centralizer orbit) are
/// dropped, and `damping` is added to every retained eigenvalue.
fn newton_direction(hess: DMatrix<f64>, grad: &DVector<f64>, damping: f64) -> DVector<f64> {
    let mut h = hess;
    symmetrize(&mut h);
    let eig = h.symmetric_eigen();
    let scale = eig.eigenvalues.amax();
    let floor = 1e-9 * scale.max(f64::MIN_POSITIVE);
    let mut d = DVector::zeros(grad.len());
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= floor {
            continue;
        }
        let v = eig.eigenvectors.column(i);
        d -= v * (v.dot(grad) / (lam.abs() + damping));
    }
    d
}

/// Backtracking line search; returns the accepted point and its value.
fn line_search(
    model: &ConcentratedModel,
    g: &BlockMatrixG,
    x: &DVector<f64>,
    f0: f64,
    grad: &DVector<f64>,
    dir: &DVector<f64>,
    alpha0: f64,
) -> Option<(BlockMatrixG, f64, f64)> {
    let slope = grad.dot(dir);
    if !(slope < 0.0) {
        return None;
    }
    let mut alpha = alpha0;
    for _ in 0..MAX_HALVINGS {
        let cand = from_vec(g, &(x + dir * alpha));
        if let Ok(f) = model.neg_log_lik(&cand) {
            if f.is_finite() && f <= f0 + ARMIJO * alpha * slope {
                return Some((cand, f, alpha));
            }
        }
        alpha *= 0.5;
    }
    None
}

pub(crate) fn minimize(model: &ConcentratedModel, start: BlockMatrixG, set: Settings) -> Result<Outcome> {
    let mut g = if set.normalize {
        normalized(&start).unwrap_or(start)
    } else {
        start
    };
    let mut value = model.neg_log_lik(&g)?;
    let mut damping = 0.0;
    let mut gd_alpha = 1.0;
    let mut iterations = 0;
    let mut since_norm = 0;
    let mut diverged = false;

    loop {
        let eval = model.evaluate(&g)?;
        let grad_m = eval.gradient();
        let grad_norm = grad_m.amax();
        if grad_norm <= set.grad_tol {
            // confirm on the normalized representative
            if set.normalize && since_norm > 0 {
                if let Some(gn) = normalized(&g) {
                    g = gn;
                    value = model.neg_log_lik(&g)?;
                    since_norm = 0;
                    continue;
                }
            }
            return Ok(Outcome { g, value, grad_norm, iterations, converged: true, diverged });
        }
        if iterations >= set.max_iters || diverged {
            return Ok(Outcome { g, value, grad_norm, iterations, converged: false, diverged });
        }
        iterations += 1;

        let x = DVector::from_vec(row_major(g.data()));
        let grad = DVector::from_vec(row_major(&grad_m));
        let mut accepted = None;
        if set.rule == StepRule::Newton {
            let dir = newton_direction(eval.hessian_matrix(), &grad, damping);
            accepted = line_search(model, &g, &x, value, &grad, &dir, 1.0);
            match &accepted {
                Some((_, _, alpha)) if *alpha == 1.0 => damping *= 0.1,
                Some(_) => damping = (damping * 2.0).max(1e-8 * grad_norm),
                None => damping = (damping * 10.0).max(1e-6),
            }
            if accepted.is_none() {
                // full step that stays within round-off of the current value
                let cand = from_vec(&g, &(&x + &dir));
                if let Ok(f) = model.neg_log_lik(&cand) {
                    if f <= value + 1e-13 * (1.0 + value.abs()) && dir.amax() < 1e-6 {
                        accepted = Some((cand, f, 1.0));
                    }
                }
            }
        }
        if accepted.is_none() {
            let dir = -&grad;
            accepted = line_search(model, &g, &x, value, &grad, &dir, gd_alpha);
            match &accepted {
                Some((_, _, alpha)) => gd_alpha = (alpha * 2.0).min(1e6),
                None => {
                    // a badly scaled representative can stall both searches
                    if set.normalize && since_norm > 0 {
                        if let Some(gn) = normalized(&g) {
                            g = gn;
                            value = model.neg_log_lik(&g)?;
                            since_norm = 0;
                            damping = 0.0;
                            gd_alpha = 1.0;
                            continue;
                        }
                    }
                    return Ok(Outcome { g, value, grad_norm, iterations, converged: false, diverged });
                }
            }
        }
        let (ng, nv, _) = accepted.expect("checked above");
        g = ng;
        value = nv;
        since_norm += 1;

        if set.normalize && (since_norm >= RENORMALIZE_EVERY || g.data().amax() > 1e4) {
            match normalized(&g) {
                Some(gn) => {
                    g = gn;
                    value = model.neg_log_lik(&g)?;
                    since_norm = 0;
                }
                None => diverged = true,
            }
        }
        if g.data().amax() > DIVERGENCE_BOUND {
            diverged = true;
        }
    }
}
