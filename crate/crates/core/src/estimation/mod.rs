//! Fitting `G` by maximum likelihood, structure selection and forecasting.

mod optimizer;
mod scan;
mod select;

pub use scan::{scan, scan_surface, ScanResult};
pub use select::{information_criterion, select_structure, select_with_fits, Criterion, SelectionReport, SelectionRow};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockops::{check_minimality_g, check_minimality_h, lq_multi_lag, BlockMatrixG, RankReport};
use crate::error::{Error, Result};
use crate::likelihood::{phi_from_hfg, ConcentratedModel, LagDataset, MomentMatrices};
use crate::linalg::{symmetrize, SpdFactor, RANK_TOL};
use crate::structure::StructureParams;
use optimizer::{minimize, Outcome, Settings, StepRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Gradient,
    Newton,
    /// Circle scan for `m = 2`, polished by Newton.
    GridScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub method: FitMethod,
    pub restarts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
    pub use_lq_normalization: bool,
    /// Grid size for [`FitMethod::GridScan`].
    pub scan_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            method: FitMethod::Newton,
            restarts: 4,
            max_iters: 500,
            grad_tol: 1e-8,
            seed: 0,
            use_lq_normalization: true,
            scan_points: 2000,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidInput("restarts must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidInput("grad_tol must be positive".into()));
        }
        if self.method == FitMethod::GridScan && self.scan_points == 0 {
            return Err(Error::InvalidInput("scan_points must be positive".into()));
        }
        Ok(())
    }

    fn settings(&self) -> Settings {
        Settings {
            rule: if self.method == FitMethod::Gradient {
                StepRule::Gradient
            } else {
                StepRule::Newton
            },
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            normalize: self.use_lq_normalization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub structure: StructureParams,
    #[serde(rename = "G")]
    pub g: BlockMatrixG,
    #[serde(rename = "H", with = "crate::json::matrix")]
    pub h: DMatrix<f64>,
    #[serde(rename = "F", with = "crate::json::matrix")]
    pub f: DMatrix<f64>,
    #[serde(rename = "Phi", with = "crate::json::matrix_vec")]
    pub phi: Vec<DMatrix<f64>>,
    #[serde(rename = "Omega", with = "crate::json::matrix")]
    pub omega: DMatrix<f64>,
    #[serde(with = "crate::json::fixed")]
    pub neg_log_lik: f64,
    #[serde(with = "crate::json::fixed")]
    pub grad_norm: f64,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub restarts_used: usize,
    pub minimality_g: RankReport,
    pub minimality_h: RankReport,
    pub n_samples: usize,
    pub autoregressive: bool,
}

impl FitResult {
    pub fn p(&self) -> usize {
        self.structure.p()
    }

    pub fn k(&self) -> usize {
        self.h.nrows()
    }

    pub fn m(&self) -> usize {
        self.g.m()
    }
}

/// Random normal `G`, LQ-normalized; `stream` separates restarts.
pub fn random_start(s: &StructureParams, m: usize, seed: u64, stream: u64) -> Result<BlockMatrixG> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let data = DMatrix::from_fn(s.n_min(), m, |_, _| StandardNormal.sample(&mut rng));
    let g = BlockMatrixG::new(s.clone(), data)?;
    Ok(lq_multi_lag(&g)?.with_positive_signs().g_o)
}

fn finish(model: &ConcentratedModel, data_t: usize, autoregressive: bool, out: Outcome, restarts: usize) -> Result<FitResult> {
    let g = out.g;
    let h = model.optimal_h(&g)?;
    let omega = model.residual_covariance(&g, &h)?;
    let phi = phi_from_hfg(&h, &g)?;
    Ok(FitResult {
        structure: g.structure().clone(),
        f: g.structure().jordan_matrix(),
        minimality_g: check_minimality_g(&g, RANK_TOL),
        minimality_h: check_minimality_h(&h, g.structure(), RANK_TOL)?,
        neg_log_lik: out.value,
        grad_norm: out.grad_norm,
        converged: out.converged,
        diverged: out.diverged,
        iterations: out.iterations,
        restarts_used: restarts,
        n_samples: data_t,
        autoregressive,
        g,
        h,
        phi,
        omega,
    })
}

/// Lower objective wins; ties go to the earlier candidate.
fn better(a: &(usize, Outcome), b: &(usize, Outcome)) -> bool {
    match a.1.value.total_cmp(&b.1.value) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Equal => a.0 < b.0,
        std::cmp::Ordering::Greater => false,
    }
}

/// Fit from random restarts plus the given warm starts (tried first).
pub(crate) fn fit_model(
    model: &ConcentratedModel,
    data_t: usize,
    autoregressive: bool,
    warm: Vec<BlockMatrixG>,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    let s = model.structure().clone();
    let m = model.m();
    let set = opts.settings();
    let n_warm = warm.len();

    let mut jobs: Vec<(usize, Option<BlockMatrixG>)> = warm.into_iter().map(Some).enumerate().collect();
    jobs.extend((0..opts.restarts).map(|r| (n_warm + r, None)));
    if opts.method == FitMethod::GridScan {
        let sc = scan(model, opts.scan_points)?;
        jobs.push((jobs.len(), Some(sc.best_g)));
    }

    let results: Vec<(usize, Result<Outcome>)> = jobs
        .into_par_iter()
        .map(|(idx, start)| {
            let start = match start {
                Some(g) => Ok(g),
                None => random_start(&s, m, opts.seed, (idx - n_warm) as u64),
            };
            (idx, start.and_then(|g| minimize(model, g, set)))
        })
        .collect();

    let mut best: Option<(usize, Outcome)> = None;
    let mut first_err = None;
    for (idx, r) in results {
        match r {
            Ok(o) => {
                let cand = (idx, o);
                if best.as_ref().is_none_or(|b| better(&cand, b)) {
                    best = Some(cand);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some((_, out)) => finish(model, data_t, autoregressive, out, opts.restarts),
        None => Err(first_err.expect("at least one job ran")),
    }
}

/// Maximum likelihood fit of `G` for a fixed structure.
pub fn fit(data: &LagDataset, structure: &StructureParams, opts: &FitOptions) -> Result<FitResult> {
    let model = ConcentratedModel::new(structure.clone(), MomentMatrices::from_data(data)?)?;
    fit_model(&model, data.t(), data.autoregressive, Vec::new(), opts)
}

/// Local fit from a caller-supplied starting point (no random restarts).
pub fn fit_from(data: &LagDataset, start: &BlockMatrixG, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    let model = ConcentratedModel::new(start.structure().clone(), MomentMatrices::from_data(data)?)?;
    let out = minimize(&model, start.clone(), opts.settings())?;
    finish(&model, data.t(), data.autoregressive, out, 0)
}

/// Unrestricted least squares of `Y` on all lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    #[serde(rename = "Phi", with = "crate::json::matrix_vec")]
    pub phi: Vec<DMatrix<f64>>,
    #[serde(rename = "Omega", with = "crate::json::matrix")]
    pub omega: DMatrix<f64>,
    /// `-inf` when the regression is exact.
    #[serde(with = "crate::json::fixed")]
    pub neg_log_lik: f64,
}

pub fn full_ols_from_moments(mo: &MomentMatrices) -> Result<OlsFit> {
    let fb = SpdFactor::new(&mo.b, "X_lag X_lag'").map_err(|e| Error::SingularMoments(e.to_string()))?;
    let pi = &mo.yx * fb.inverse();
    let m = mo.m();
    let phi = (1..=mo.p).map(|i| pi.columns((mo.p - i) * m, m).clone_owned()).collect();
    let mut omega = (&mo.yy - &pi * mo.yx.transpose()) / mo.t as f64;
    symmetrize(&mut omega);
    let neg_log_lik = match SpdFactor::new(&mo.a, "A") {
        Ok(fa) => fa.log_det() - fb.log_det(),
        Err(_) => f64::NEG_INFINITY,
    };
    Ok(OlsFit { phi, omega, neg_log_lik })
}

pub fn full_ols_fit(data: &LagDataset) -> Result<OlsFit> {
    full_ols_from_moments(&MomentMatrices::from_data(data)?)
}

/// Forecast `steps` ahead from the `p` most recent regressor samples (newest last).
pub fn predict(phi: &[DMatrix<f64>], x_recent: &DMatrix<f64>, steps: usize, autoregressive: bool) -> Result<DMatrix<f64>> {
    let p = phi.len();
    let first = phi.first().ok_or_else(|| Error::InvalidInput("no lag coefficients".into()))?;
    let (k, m) = first.shape();
    if x_recent.shape() != (m, p) {
        return Err(Error::Dimension(format!(
            "recent regressors must be {m}x{p}, got {:?}",
            x_recent.shape()
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidInput("steps must be at least 1".into()));
    }
    if steps > 1 && !(autoregressive && k == m) {
        return Err(Error::Unsupported(
            "multi-step forecasts need an autoregressive model (regressors equal to responses)".into(),
        ));
    }
    let mut hist: Vec<nalgebra::DVector<f64>> = x_recent.column_iter().map(|c| c.clone_owned()).collect();
    let mut out = DMatrix::zeros(k, steps);
    for s in 0..steps {
        let n = hist.len();
        let mut y = nalgebra::DVector::zeros(k);
        for (i, ph) in phi.iter().enumerate() {
            y += ph * &hist[n - 1 - i];
        }
        out.set_column(s, &y);
        hist.push(y);
    }
    Ok(out)
}

impl FitResult {
    pub fn predict(&self, x_recent: &DMatrix<f64>, steps: usize) -> Result<DMatrix<f64>> {
        predict(&self.phi, x_recent, steps, self.autoregressive)
    }
}
