use faer::linalg::solvers::{DenseSolveCore, EvdError};
use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

fn evd_failed(_: EvdError) -> Error {
    Error::Config("eigendecomposition failed to converge".into())
}

/// Sample covariance (1/q) * Y * Y^H of a p x q snapshot matrix.
pub fn sample_covariance(y: MatRef<'_, Complex64>) -> CMat {
    let q = y.ncols().max(1) as f64;
    let mut r = y * y.adjoint();
    let inv_q = 1.0 / q;
    for j in 0..r.ncols() {
        for i in 0..r.nrows() {
            r[(i, j)] *= inv_q;
        }
    }
    r
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues (and matching
/// eigenvector columns) sorted descending.
pub fn hermitian_eig_desc(r: MatRef<'_, Complex64>) -> Result<(Vec<f64>, CMat)> {
    let n = r.nrows();
    let evd = r.self_adjoint_eigen(Side::Lower).map_err(evd_failed)?;
    let s = evd.S();
    let u = evd.U();
    let vals: Vec<f64> = (0..n).map(|i| s[n - 1 - i].re).collect();
    let vecs = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok((vals, vecs))
}

/// Eigenvalues of a Hermitian matrix, descending, without eigenvectors.
pub fn hermitian_eigvals_desc(r: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    let mut vals = r
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(evd_failed)?;
    vals.reverse();
    Ok(vals)
}

/// Eigenvalues of a general complex matrix, sorted by descending modulus.
pub fn general_eigvals_desc(m: MatRef<'_, Complex64>) -> Result<Vec<Complex64>> {
    let mut vals = m.eigenvalues().map_err(evd_failed)?;
    vals.sort_by(|a, b| b.norm_sqr().total_cmp(&a.norm_sqr()));
    Ok(vals)
}

/// Singular values of a general complex matrix, nonincreasing.
pub fn singular_values(m: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    let svd = m
        .svd()
        .map_err(|_| Error::Config("singular value decomposition failed to converge".into()))?;
    let s = svd.S();
    Ok((0..m.nrows().min(m.ncols())).map(|i| s[i].re).collect())
}

/// Two-norm condition number; infinite for an exactly singular matrix.
pub fn cond2(m: MatRef<'_, Complex64>) -> Result<f64> {
    let s = singular_values(m)?;
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    if min <= 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(max / min)
    }
}

/// Inverse via partially pivoted LU.
pub fn inverse(m: MatRef<'_, Complex64>) -> CMat {
    m.partial_piv_lu().inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn covariance_of_rank_one_snapshots() {
        let v = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)];
        let q = 5;
        let y = Mat::from_fn(3, q, |i, j| v[i] * c(0.0, 1.0).powu(j as u32));
        let r = sample_covariance(y.as_ref());
        for i in 0..3 {
            for j in 0..3 {
                let want = v[i] * v[j].conj();
                assert_abs_diff_eq!(r[(i, j)].re, want.re, epsilon = 1e-12);
                assert_abs_diff_eq!(r[(i, j)].im, want.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_eig_is_descending_and_consistent() {
        let a = Mat::from_fn(4, 4, |i, j| {
            if i == j {
                c((i + 1) as f64, 0.0)
            } else {
                c(0.1, if i < j { 0.05 } else { -0.05 })
            }
        });
        let (vals, vecs) = hermitian_eig_desc(a.as_ref()).unwrap();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        for k in 0..4 {
            for i in 0..4 {
                let mut av = c(0.0, 0.0);
                for j in 0..4 {
                    av += a[(i, j)] * vecs[(j, k)];
                }
                let want = vecs[(i, k)] * vals[k];
                assert_abs_diff_eq!(av.re, want.re, epsilon = 1e-10);
                assert_abs_diff_eq!(av.im, want.im, epsilon = 1e-10);
            }
        }
        let only_vals = hermitian_eigvals_desc(a.as_ref()).unwrap();
        for (a, b) in vals.iter().zip(&only_vals) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn general_eigvals_of_rotation() {
        let phi = 0.7f64;
        let m = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => c(phi.cos(), 0.0),
            (0, 1) => c(-phi.sin(), 0.0),
            _ => c(phi.sin(), 0.0),
        });
        let vals = general_eigvals_desc(m.as_ref()).unwrap();
        let mut angles: Vec<f64> = vals.iter().map(|v| v.im.atan2(v.re)).collect();
        angles.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(angles[0], -phi, epsilon = 1e-12);
        assert_abs_diff_eq!(angles[1], phi, epsilon = 1e-12);
    }

    #[test]
    fn inverse_and_condition() {
        let m = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                c(2.0, 0.0)
            } else {
                c(0.3, 0.1 * (i as f64 - j as f64))
            }
        });
        let inv = inverse(m.as_ref());
        let prod = &m * &inv;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[(i, j)].re, want, epsilon = 1e-12);
                assert_abs_diff_eq!(prod[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
        let cond = cond2(m.as_ref()).unwrap();
        assert!(cond > 1.0 && cond < 10.0, "cond = {cond}");

        let singular = Mat::from_fn(2, 2, |_, _| c(1.0, 0.0));
        assert!(cond2(singular.as_ref()).unwrap() > 1e12);
    }
}
