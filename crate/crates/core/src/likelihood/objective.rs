//! Concentrated objective `log det(κAκ') - log det(κBκ')` and its derivatives.

use nalgebra::DMatrix;

use super::MomentMatrices;
use crate::blockops::{kappa, kappa_adjoint, BlockMatrixG};
use crate::error::{Error, Result};
use crate::linalg::{lower_triangular_inverse, lq, symmetrize, SpdFactor};
use crate::structure::StructureParams;

/// A structure paired with fixed moments.
#[derive(Debug, Clone)]
pub struct ConcentratedModel {
    structure: StructureParams,
    moments: MomentMatrices,
}

/// Factorizations of `κAκ'` and `κBκ'` at one `G`.
#[derive(Debug, Clone)]
pub struct Evaluation<'a> {
    model: &'a ConcentratedModel,
    kg: DMatrix<f64>,
    /// `L^{-1}` from `κ(G) = L W`
    linv: DMatrix<f64>,
    /// `W A`
    wa: DMatrix<f64>,
    wb: DMatrix<f64>,
    /// `(W A W')^{-1}`
    ma_inv: DMatrix<f64>,
    mb_inv: DMatrix<f64>,
    /// `2 (κAκ')^{-1} κA - 2 (κBκ')^{-1} κB`
    kernel: DMatrix<f64>,
    value: f64,
}

/// `log det(K M K')` with its inverse; `what` names the failure.
fn factor(k: &DMatrix<f64>, p: &DMatrix<f64>, domain: bool) -> Result<SpdFactor> {
    let mut m = p * k.transpose();
    symmetrize(&mut m);
    SpdFactor::new(&m, if domain { "κAκ'" } else { "κBκ'" }).map_err(|e| match (domain, e) {
        (true, Error::NotPositiveDefinite(msg)) => Error::Domain(msg),
        (_, e) => e,
    })
}

impl ConcentratedModel {
    pub fn new(structure: StructureParams, moments: MomentMatrices) -> Result<Self> {
        if structure.p() != moments.p {
            return Err(Error::Dimension(format!(
                "structure {structure} has p = {} but the data were lagged with p = {}",
                structure.p(),
                moments.p
            )));
        }
        structure.validate_for(moments.k(), moments.m())?;
        Ok(Self { structure, moments })
    }

    pub fn structure(&self) -> &StructureParams {
        &self.structure
    }

    pub fn moments(&self) -> &MomentMatrices {
        &self.moments
    }

    pub fn m(&self) -> usize {
        self.moments.m()
    }

    pub fn k(&self) -> usize {
        self.moments.k()
    }

    fn check(&self, g: &BlockMatrixG) -> Result<()> {
        if g.structure() != &self.structure || g.m() != self.m() {
            return Err(Error::Dimension(format!(
                "G ({}, m = {}) does not match the model ({}, m = {})",
                g.structure(),
                g.m(),
                self.structure,
                self.m()
            )));
        }
        Ok(())
    }

    /// `κ(G) = L W` with `W W' = I`. `L` cancels from the ratio, so the value
    /// is computed from `W` alone and stays accurate when `κ(G)` is badly scaled.
    fn split(&self, g: &BlockMatrixG) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        self.check(g)?;
        let kg = kappa(g);
        let (l, w) = lq(&kg);
        let diag = l.diagonal().abs();
        let top = diag.max();
        if !(top > 0.0) || diag.min() <= 1e-14 * top {
            return Err(Error::NotPositiveDefinite("κBκ': κ(G) is rank deficient".into()));
        }
        Ok((kg, l, w))
    }

    pub fn evaluate(&self, g: &BlockMatrixG) -> Result<Evaluation<'_>> {
        let (kg, l, w) = self.split(g)?;
        let linv = lower_triangular_inverse(&l)?;
        let wb = &w * &self.moments.b;
        let fb = factor(&w, &wb, false)?;
        let wa = &w * &self.moments.a;
        let fa = factor(&w, &wa, true)?;
        let kernel = 2.0 * linv.transpose() * (fa.inverse() * &wa - fb.inverse() * &wb);
        Ok(Evaluation {
            model: self,
            value: fa.log_det() - fb.log_det(),
            ma_inv: fa.inverse().clone(),
            mb_inv: fb.inverse().clone(),
            kernel,
            kg,
            linv,
            wa,
            wb,
        })
    }

    pub fn neg_log_lik(&self, g: &BlockMatrixG) -> Result<f64> {
        Ok(self.evaluate(g)?.value())
    }

    pub fn gradient(&self, g: &BlockMatrixG) -> Result<DMatrix<f64>> {
        Ok(self.evaluate(g)?.gradient())
    }

    pub fn hessian_bilinear(
        &self,
        g: &BlockMatrixG,
        psi: &DMatrix<f64>,
        eta: &DMatrix<f64>,
    ) -> Result<f64> {
        Ok(self.evaluate(g)?.hessian_bilinear(psi, eta))
    }

    /// Least-squares `H` given `G`: `YX κ' (κBκ')^{-1}`.
    pub fn optimal_h(&self, g: &BlockMatrixG) -> Result<DMatrix<f64>> {
        let (_, l, w) = self.split(g)?;
        let fb = factor(&w, &(&w * &self.moments.b), false)?;
        let linv = lower_triangular_inverse(&l)?;
        Ok(&self.moments.yx * w.transpose() * fb.inverse() * linv)
    }

    /// `Ω = (Y - H κ X)(Y - H κ X)' / T`, computed from the moments.
    pub fn residual_covariance(&self, g: &BlockMatrixG, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(g)?;
        let kg = kappa(g);
        if h.shape() != (self.k(), kg.nrows()) {
            return Err(Error::Dimension(format!(
                "H is {:?}, expected {:?}",
                h.shape(),
                (self.k(), kg.nrows())
            )));
        }
        let mo = &self.moments;
        // H κ(G) holds the lag coefficients and is well scaled even when H and κ(G) are not
        let pi = h * &kg;
        let cross = &pi * mo.yx.transpose();
        let mut om = &mo.yy - &cross - cross.transpose() + &pi * &mo.b * pi.transpose();
        symmetrize(&mut om);
        Ok(om / mo.t as f64)
    }
}

impl Evaluation<'_> {
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Gradient with respect to `G`, shaped like `G`.
    pub fn gradient(&self) -> DMatrix<f64> {
        kappa_adjoint(&self.model.structure, &self.kernel, self.model.m())
    }

    /// `N(ψ)` with `D²f[ψ, η] = <κ(η), L^{-T} N(ψ)>`, in the frame of `W`.
    /// Takes `u = L^{-1} κ(ψ)`.
    fn second_kernel(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let part = |minv: &DMatrix<f64>, p: &DMatrix<f64>, mom: &DMatrix<f64>| {
            let dm = u * p.transpose() + p * u.transpose();
            2.0 * minv * (u * mom) - 2.0 * minv * dm * minv * p
        };
        part(&self.ma_inv, &self.wa, &self.model.moments.a)
            - part(&self.mb_inv, &self.wb, &self.model.moments.b)
    }

    fn kappa_of(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let g = BlockMatrixG::new(self.model.structure.clone(), x.clone())
            .expect("direction shaped like G");
        kappa(&g)
    }

    pub fn hessian_bilinear(&self, psi: &DMatrix<f64>, eta: &DMatrix<f64>) -> f64 {
        let n = self.second_kernel(&(&self.linv * self.kappa_of(psi)));
        (&self.linv * self.kappa_of(eta)).dot(&n)
    }

    /// Hessian on `vec(G)` with row-major index `a * m + b`.
    pub fn hessian_matrix(&self) -> DMatrix<f64> {
        let s = &self.model.structure;
        let (n, m) = (s.n_min(), self.model.m());
        let dim = n * m;
        let mut h = DMatrix::zeros(dim, dim);
        let mut psi = DMatrix::zeros(n, m);
        for a in 0..n {
            for b in 0..m {
                psi[(a, b)] = 1.0;
                let n = self.linv.transpose() * self.second_kernel(&(&self.linv * self.kappa_of(&psi)));
                let col = kappa_adjoint(s, &n, m);
                psi[(a, b)] = 0.0;
                for (i, v) in crate::linalg::row_major(&col).into_iter().enumerate() {
                    h[(a * m + b, i)] = v;
                }
            }
        }
        symmetrize(&mut h);
        h
    }

    pub fn kappa_g(&self) -> &DMatrix<f64> {
        &self.kg
    }
}
