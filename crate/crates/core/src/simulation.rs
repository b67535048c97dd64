//! Random stable models with a given structure, and sample paths from them.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::blockops::{check_minimality_g, check_minimality_h, lq_multi_lag, BlockMatrixG};
use crate::error::{Error, Result};
use crate::likelihood::phi_from_hfg;
use crate::linalg::{spectral_radius, RANK_TOL};
use crate::structure::StructureParams;

pub const DEFAULT_MARGIN: f64 = 1e-8;
const MAX_DRAWS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedModel {
    pub structure: StructureParams,
    #[serde(rename = "H", with = "crate::json::matrix")]
    pub h: DMatrix<f64>,
    #[serde(rename = "F", with = "crate::json::matrix")]
    pub f: DMatrix<f64>,
    #[serde(rename = "G")]
    pub g: BlockMatrixG,
    #[serde(rename = "Phi", with = "crate::json::matrix_vec")]
    pub phi: Vec<DMatrix<f64>>,
    #[serde(rename = "Omega", with = "crate::json::matrix")]
    pub omega: DMatrix<f64>,
    pub seed: u64,
    /// Companion spectral radius when `k = m`.
    #[serde(with = "crate::json::fixed_opt")]
    pub spectral_radius: Option<f64>,
}

impl GeneratedModel {
    pub fn k(&self) -> usize {
        self.h.nrows()
    }

    pub fn m(&self) -> usize {
        self.g.m()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOptions {
    /// Companion spectral radius the `H` rescaling aims for.
    pub target_radius: f64,
    /// Noise covariance; identity when `None`.
    pub omega: Option<DMatrix<f64>>,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            target_radius: 0.7,
            omega: None,
        }
    }
}

/// Block companion matrix of `y_t = Σ Φ_i y_{t-i}`.
pub fn companion(phi: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let first = phi.first().ok_or_else(|| Error::InvalidInput("no lag coefficients".into()))?;
    let k = first.nrows();
    if phi.iter().any(|x| x.shape() != (k, k)) {
        return Err(Error::Dimension("companion form needs square Φ_i of equal size".into()));
    }
    let p = phi.len();
    let mut c = DMatrix::zeros(p * k, p * k);
    for (i, ph) in phi.iter().enumerate() {
        c.view_mut((0, i * k), (k, k)).copy_from(ph);
    }
    for i in 1..p {
        c.view_mut((i * k, (i - 1) * k), (k, k)).fill_with_identity();
    }
    Ok(c)
}

/// `(stable, radius)` with stability meaning `radius < 1 - margin`.
pub fn is_stable(phi: &[DMatrix<f64>], margin: f64) -> Result<(bool, f64)> {
    let rho = spectral_radius(&companion(phi)?);
    Ok((rho < 1.0 - margin, rho))
}

fn normal_matrix(rng: &mut ChaCha20Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn radius_scaled(h: &DMatrix<f64>, g: &BlockMatrixG, c: f64) -> Result<f64> {
    Ok(spectral_radius(&companion(&phi_from_hfg(&(h * c), g)?)?))
}

/// Scale factor for `H` that puts the companion radius at `target` (from
/// below). The radius is not linear in the scale once `p > 1`, so bisect.
fn stabilizing_scale(h: &DMatrix<f64>, g: &BlockMatrixG, target: f64) -> Result<f64> {
    let rho1 = radius_scaled(h, g, 1.0)?;
    if rho1 < 1e-12 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, target / rho1);
    let mut grow = 0;
    while radius_scaled(h, g, hi)? <= target {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Ok(lo);
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if radius_scaled(h, g, mid)? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn random_stable_model(s: &StructureParams, k: usize, m: usize, seed: u64) -> Result<GeneratedModel> {
    random_stable_model_with(s, k, m, seed, &GeneratorOptions::default())
}

pub fn random_stable_model_with(
    s: &StructureParams,
    k: usize,
    m: usize,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<GeneratedModel> {
    s.validate_for(k, m)?;
    if !(opts.target_radius > 0.0 && opts.target_radius < 1.0) {
        return Err(Error::InvalidInput("target radius must lie in (0, 1)".into()));
    }
    let omega = match &opts.omega {
        Some(o) => {
            if o.shape() != (k, k) || o.clone().cholesky().is_none() {
                return Err(Error::NotPositiveDefinite("noise covariance must be k x k SPD".into()));
            }
            o.clone()
        }
        None => DMatrix::identity(k, k),
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let g_raw = BlockMatrixG::new(s.clone(), normal_matrix(&mut rng, s.n_min(), m))?;
        let h_raw = normal_matrix(&mut rng, k, s.n_min());
        let Ok(lq) = lq_multi_lag(&g_raw) else { continue };
        let g = lq.with_positive_signs().g_o;
        let mut h = h_raw;
        let mut radius = None;
        if k == m {
            h *= stabilizing_scale(&h, &g, opts.target_radius)?;
        }
        let phi = phi_from_hfg(&h, &g)?;
        if k == m {
            let (stable, rho) = is_stable(&phi, DEFAULT_MARGIN)?;
            if !stable {
                continue;
            }
            radius = Some(rho);
        }
        if !check_minimality_g(&g, RANK_TOL).passed || !check_minimality_h(&h, s, RANK_TOL)?.passed {
            continue;
        }
        return Ok(GeneratedModel {
            structure: s.clone(),
            f: s.jordan_matrix(),
            h,
            g,
            phi,
            omega,
            seed,
            spectral_radius: radius,
        });
    }
    Err(Error::RankDeficient {
        what: "generated model",
        rank: 0,
        expected: s.rank_alloc(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationMode {
    /// `x_t = y_t`
    Autoregressive,
    /// `x_t` i.i.d. standard normal
    Exogenous,
}

/// Simulated series with columns as time.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
}

pub const DEFAULT_BURN_IN: usize = 100;

/// Draw `t` samples after discarding `burn_in`.
pub fn simulate(
    model: &GeneratedModel,
    t: usize,
    seed: u64,
    burn_in: usize,
    mode: SimulationMode,
) -> Result<SimulatedData> {
    let (k, m, p) = (model.k(), model.m(), model.phi.len());
    if mode == SimulationMode::Autoregressive {
        if k != m {
            return Err(Error::Dimension(format!(
                "autoregressive simulation needs k = m, got k = {k}, m = {m}"
            )));
        }
        let (stable, rho) = is_stable(&model.phi, DEFAULT_MARGIN)?;
        if !stable {
            return Err(Error::Unstable(rho));
        }
    }
    let chol = model
        .omega
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("noise covariance".into()))?
        .l();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = t + burn_in;
    let mut y = DMatrix::zeros(k, n);
    let mut x = DMatrix::zeros(m, n);
    for s in 0..n {
        if mode == SimulationMode::Exogenous {
            let col: DVector<f64> = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
            x.set_column(s, &col);
        }
        let z: DVector<f64> = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let mut ys = &chol * z;
        for (i, ph) in model.phi.iter().enumerate().take(p) {
            if s > i {
                ys += ph * x.column(s - 1 - i);
            }
        }
        y.set_column(s, &ys);
        if mode == SimulationMode::Autoregressive {
            x.set_column(s, &ys);
        }
    }
    Ok(SimulatedData {
        y: y.columns(burn_in, t).clone_owned(),
        x: x.columns(burn_in, t).clone_owned(),
    })
}
