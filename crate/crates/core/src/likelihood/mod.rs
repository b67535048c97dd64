//! Lagged data, moment matrices and the concentrated likelihood.

mod objective;
mod phi;

pub use objective::{ConcentratedModel, Evaluation};
pub use phi::{
    phi_from_hfg, phi_from_power, vrw_neg_log_lik, vrw_optimal_a, vrw_upsilon, VrwCoefficients,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetrize, SpdFactor};

/// Responses and stacked lagged regressors aligned on a common window.
#[derive(Debug, Clone, PartialEq)]
pub struct LagDataset {
    /// `k x T`
    pub y: DMatrix<f64>,
    /// `(p m) x T`, lag `p` block first
    pub x_lag: DMatrix<f64>,
    pub p: usize,
    /// Regressors are the responses themselves.
    pub autoregressive: bool,
}

impl LagDataset {
    pub fn k(&self) -> usize {
        self.y.nrows()
    }

    pub fn m(&self) -> usize {
        self.x_lag.nrows() / self.p
    }

    pub fn t(&self) -> usize {
        self.y.ncols()
    }

    /// `L^i X`, the `m x T` block for lag `i`.
    pub fn lag_block(&self, i: usize) -> DMatrix<f64> {
        assert!((1..=self.p).contains(&i), "lag {i} out of range");
        let m = self.m();
        self.x_lag.rows((self.p - i) * m, m).clone_owned()
    }
}

/// Align `X_f` (`m x (T+p)`) and `Y_f` (`k x (T+p)`), columns being time.
pub fn build_lag_data(x_f: &DMatrix<f64>, y_f: &DMatrix<f64>, p: usize) -> Result<LagDataset> {
    if p == 0 {
        return Err(Error::InvalidInput("lag order p must be at least 1".into()));
    }
    if x_f.ncols() != y_f.ncols() {
        return Err(Error::Dimension(format!(
            "X has {} samples but Y has {}",
            x_f.ncols(),
            y_f.ncols()
        )));
    }
    if x_f.ncols() <= p {
        return Err(Error::InsufficientSamples(format!(
            "{} samples leave no observations after dropping p = {p}",
            x_f.ncols()
        )));
    }
    let t = x_f.ncols() - p;
    let m = x_f.nrows();
    let mut x_lag = DMatrix::zeros(p * m, t);
    for i in 1..=p {
        x_lag
            .rows_mut((p - i) * m, m)
            .copy_from(&x_f.columns(p - i, t));
    }
    Ok(LagDataset {
        y: y_f.columns(p, t).clone_owned(),
        x_lag,
        p,
        autoregressive: x_f == y_f,
    })
}

/// Second moments of a lag dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentMatrices {
    /// `B - YX' (YY)^{-1} YX`
    #[serde(with = "crate::json::matrix")]
    pub a: DMatrix<f64>,
    /// `X_lag X_lag'`
    #[serde(with = "crate::json::matrix")]
    pub b: DMatrix<f64>,
    #[serde(with = "crate::json::matrix")]
    pub yy: DMatrix<f64>,
    /// `Y X_lag'`
    #[serde(with = "crate::json::matrix")]
    pub yx: DMatrix<f64>,
    pub t: usize,
    pub p: usize,
}

impl MomentMatrices {
    pub fn from_data(data: &LagDataset) -> Result<Self> {
        let mut b = &data.x_lag * data.x_lag.transpose();
        symmetrize(&mut b);
        let mut yy = &data.y * data.y.transpose();
        symmetrize(&mut yy);
        let yx = &data.y * data.x_lag.transpose();
        Self::from_parts(b, yy, yx, data.t(), data.p)
    }

    /// Assemble from raw Gram matrices.
    pub fn from_parts(
        b: DMatrix<f64>,
        yy: DMatrix<f64>,
        yx: DMatrix<f64>,
        t: usize,
        p: usize,
    ) -> Result<Self> {
        let yy_f = SpdFactor::new(&yy, "YY'").map_err(|_| {
            Error::SingularMoments(format!(
                "YY' ({0}x{0}) is singular; responses must have full row rank over {t} samples",
                yy.nrows()
            ))
        })?;
        SpdFactor::new(&b, "X_lag X_lag'").map_err(|_| {
            Error::SingularMoments(format!(
                "X_lag X_lag' ({0}x{0}) is singular with T = {t}; more samples or fewer lags are needed",
                b.nrows()
            ))
        })?;
        let mut a = &b - yx.transpose() * yy_f.inverse() * &yx;
        symmetrize(&mut a);
        Ok(Self { a, b, yy, yx, t, p })
    }

    pub fn k(&self) -> usize {
        self.yy.nrows()
    }

    pub fn pm(&self) -> usize {
        self.b.nrows()
    }

    pub fn m(&self) -> usize {
        self.pm() / self.p
    }
}
