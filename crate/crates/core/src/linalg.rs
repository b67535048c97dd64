//! Dense linear-algebra helpers shared by the estimation modules.
//!
//! The Householder QR here follows the reflector convention of LAPACK's
//! `dlarfg` (no reflection when the sub-column is already zero, otherwise
//! `beta = -sign(alpha) * norm`). Keeping this convention makes the
//! generalized LQ factorization bit-compatible with NumPy/LAPACK output.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default relative threshold for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Thin Householder QR of an `r x c` matrix with `r >= c`.
///
/// Returns `(Q, R)` with `Q` of size `r x c` (orthonormal columns) and `R`
/// upper triangular of size `c x c`. Diagonal entries of `R` may be negative.
pub fn householder_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (rows, cols) = a.shape();
    assert!(rows >= cols, "householder_qr needs rows >= cols");
    let mut work = a.clone();
    let mut vs: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cols);

    for k in 0..cols {
        let alpha = work[(k, k)];
        let xnorm = (k + 1..rows)
            .map(|i| work[(i, k)] * work[(i, k)])
            .sum::<f64>()
            .sqrt();
        if xnorm == 0.0 {
            vs.push((Vec::new(), 0.0));
            continue;
        }
        let beta = -alpha.signum() * alpha.hypot(xnorm);
        let tau = (beta - alpha) / beta;
        let scale = 1.0 / (alpha - beta);
        let mut v = vec![0.0; rows - k];
        v[0] = 1.0;
        for i in k + 1..rows {
            v[i - k] = work[(i, k)] * scale;
        }
        // apply H = I - tau v v' to the trailing columns
        for j in k + 1..cols {
            let dot: f64 = (k..rows).map(|i| v[i - k] * work[(i, j)]).sum();
            for i in k..rows {
                work[(i, j)] -= tau * v[i - k] * dot;
            }
        }
        work[(k, k)] = beta;
        for i in k + 1..rows {
            work[(i, k)] = 0.0;
        }
        vs.push((v, tau));
    }

    let r = work.rows(0, cols).upper_triangle();
    let mut q = DMatrix::<f64>::identity(rows, cols);
    for k in (0..cols).rev() {
        let (v, tau) = &vs[k];
        if *tau == 0.0 {
            continue;
        }
        for j in 0..cols {
            let dot: f64 = (k..rows).map(|i| v[i - k] * q[(i, j)]).sum();
            for i in k..rows {
                q[(i, j)] -= tau * v[i - k] * dot;
            }
        }
    }
    (q, r)
}

/// LQ factorization of a wide matrix `a = L * W` with `W W' = I`, `L` lower triangular.
pub fn lq(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (q, r) = householder_qr(&a.transpose());
    (r.transpose(), q.transpose())
}

/// Singular values above `tol * sigma_max`.
pub fn numerical_rank(a: &DMatrix<f64>, tol: f64) -> (usize, Vec<f64>) {
    if a.nrows() == 0 || a.ncols() == 0 {
        return (0, Vec::new());
    }
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return (0, sv);
    }
    let rank = sv.iter().filter(|&&s| s > tol * smax).count();
    (rank, sv)
}

/// Inverse of a non-singular lower-triangular matrix by forward substitution.
pub fn lower_triangular_inverse(l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = l.nrows();
    let mut inv = DMatrix::<f64>::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut acc = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                acc -= l[(i, k)] * inv[(k, col)];
            }
            let diag = l[(i, i)];
            if diag == 0.0 {
                return Err(Error::RankDeficient {
                    what: "triangular factor",
                    rank: i,
                    expected: n,
                });
            }
            inv[(i, col)] = acc / diag;
        }
    }
    Ok(inv)
}

/// Symmetrize in place: `(M + M') / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Factorization of a symmetric positive definite matrix, with an eigen
/// fallback for matrices that are PD but fail Cholesky through round-off.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    inverse: DMatrix<f64>,
    log_det: f64,
}

impl SpdFactor {
    pub fn new(m: &DMatrix<f64>, what: &str) -> Result<Self> {
        if let Some(ch) = m.clone().cholesky() {
            let log_det = 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            if log_det.is_finite() {
                return Ok(Self {
                    inverse: ch.inverse(),
                    log_det,
                });
            }
        }
        let mut sym = m.clone();
        symmetrize(&mut sym);
        let eig = sym.symmetric_eigen();
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 1e-300) {
            return Err(Error::NotPositiveDefinite(format!(
                "{what}: smallest eigenvalue {min:e}"
            )));
        }
        let log_det = eig.eigenvalues.iter().map(|v| v.ln()).sum();
        let inv_vals = eig.eigenvalues.map(|v| 1.0 / v);
        let inverse = &eig.eigenvectors
            * DMatrix::from_diagonal(&inv_vals)
            * eig.eigenvectors.transpose();
        Ok(Self { inverse, log_det })
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }
}

/// Eigenvalues of the symmetric-definite pencil `(A, B)`, ascending.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let ch = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("pencil denominator".into()))?;
    let l = ch.l();
    let linv = lower_triangular_inverse(&l)?;
    let mut c = &linv * a * linv.transpose();
    symmetrize(&mut c);
    let mut vals: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Row-major copy of a matrix.
pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_reconstructs_and_matches_lapack_signs() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 8.0, -2.0]);
        let (q, r) = householder_qr(&a);
        assert!((&q * &r - &a).norm() < 1e-14);
        // first reflector flips the sign; the trailing 1x1 column is left alone
        assert!(r[(0, 0)] < 0.0);
        assert!((r[(0, 0)] + 65f64.sqrt()).abs() < 1e-14);
        assert!((q[(0, 1)] + 8.0 / 65f64.sqrt()).abs() < 1e-14);
        assert!((q.transpose() * &q - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn qr_tall_matrix() {
        let a = DMatrix::from_fn(5, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5 + (i == j) as u8 as f64);
        let (q, r) = householder_qr(&a);
        assert!((&q * &r - &a).norm() < 1e-12);
        assert!((q.transpose() * &q - DMatrix::identity(3, 3)).norm() < 1e-12);
        assert_eq!(r.lower_triangle() - DMatrix::from_diagonal(&r.diagonal()), DMatrix::zeros(3, 3));
    }

    #[test]
    fn rank_detects_duplicate_rows() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 0.0, 1.0, 5.0]);
        assert_eq!(numerical_rank(&a, RANK_TOL).0, 2);
        assert_eq!(numerical_rank(&DMatrix::zeros(2, 3), RANK_TOL).0, 0);
    }

    #[test]
    fn lower_inverse() {
        let l = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 1.0, -3.0, 0.0, 4.0, 0.5, 1.5]);
        let inv = lower_triangular_inverse(&l).unwrap();
        assert!((&l * &inv - DMatrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn spd_factor_rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(SpdFactor::new(&m, "test").is_err());
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let f = SpdFactor::new(&m, "test").unwrap();
        assert!((f.log_det() - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn pencil_eigenvalues() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 6.0]));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0]));
        let v = generalized_eigenvalues(&a, &b).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-14 && (v[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn radius_of_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        assert!((spectral_radius(&m) - 0.5).abs() < 1e-12);
    }
}
