//! Small dense matrix kernel: pseudoinverse, norms, rank and square solves.
//!
//! Everything is built on the `nalgebra` SVD and LU factorizations, with a
//! Jacobi SVD fallback when the former fails its reconstruction check.

use nalgebra::{DMatrix, DVector};

use crate::{Error, NumericSettings, Result};

pub(crate) fn ensure_finite(a: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_finite_vec(v: &DVector<f64>, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Thin SVD `a = u diag(sigma) v_t`, unordered.
struct Svd {
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    v_t: DMatrix<f64>,
}

/// The `nalgebra` factorization, verified by reconstruction. On some
/// rank-deficient inputs it returns inaccurate factors; those fall back to
/// one-sided Jacobi.
fn svd(a: &DMatrix<f64>) -> Svd {
    let f = a.clone().svd(true, true);
    if let (Some(u), Some(v_t)) = (f.u, f.v_t) {
        let sigma: Vec<f64> = f.singular_values.iter().copied().collect();
        let recon = &u * DMatrix::from_diagonal(&f.singular_values) * &v_t;
        let tol = 64.0 * f64::EPSILON * a.nrows().max(a.ncols()) as f64 * frobenius_norm(a);
        if sigma.iter().all(|s| s.is_finite()) && frobenius_norm(&(recon - a)) <= tol {
            return Svd { u, sigma, v_t };
        }
    }
    jacobi_svd(a)
}

/// One-sided (Hestenes) Jacobi SVD.
fn jacobi_svd(a: &DMatrix<f64>) -> Svd {
    if a.nrows() < a.ncols() {
        let t = jacobi_svd(&a.transpose());
        return Svd {
            u: t.v_t.transpose(),
            sigma: t.sigma,
            v_t: t.u.transpose(),
        };
    }
    let n = a.ncols();
    let mut u = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dot(&u.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut u, &mut v] {
                    for r in 0..m.nrows() {
                        let (x, y) = (m[(r, p)], m[(r, q)]);
                        m[(r, p)] = c * x - s * y;
                        m[(r, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma = Vec::with_capacity(n);
    for j in 0..n {
        let s = u.column(j).norm();
        sigma.push(s);
        if s > 0.0 {
            u.column_mut(j).scale_mut(1.0 / s);
        }
    }
    Svd {
        u,
        sigma,
        v_t: v.transpose(),
    }
}

/// Singular values in non-increasing order. Empty matrices have none.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut sv = svd(a).sigma;
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Moore-Penrose pseudoinverse with the default singular-value cutoff
/// `max(rows, cols) * eps * sigma_max`.
pub fn pseudoinverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    pseudoinverse_with(a, &NumericSettings::DEFAULT)
}

pub fn pseudoinverse_with(a: &DMatrix<f64>, settings: &NumericSettings) -> Result<DMatrix<f64>> {
    if a.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    ensure_finite(a, "matrix")?;
    let (rows, cols) = a.shape();
    let Svd { u, sigma, v_t } = svd(a);
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let rel = settings
        .pinv_cutoff
        .unwrap_or(rows.max(cols) as f64 * f64::EPSILON);
    let cutoff = rel * sigma_max;

    let mut pinv = DMatrix::zeros(cols, rows);
    for (idx, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let v = v_t.row(idx).transpose();
            let ucol = u.column(idx);
            pinv += (v / s) * ucol.transpose();
        }
    }
    Ok(pinv)
}

/// Induced 2-norm (largest singular value).
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn frobenius_norm(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Number of singular values strictly above `tol * sigma_max`.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    let sv = singular_values(a);
    let Some(&sigma_max) = sv.first() else {
        return 0;
    };
    if sigma_max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * sigma_max).count()
}

/// Errors unless `a` has full row rank under `settings.rank_tol`.
pub fn require_full_row_rank(
    a: &DMatrix<f64>,
    which: &'static str,
    settings: &NumericSettings,
) -> Result<()> {
    let r = rank(a, settings.rank_tol);
    if r < a.nrows() {
        return Err(Error::RankDeficient {
            which,
            rank: r,
            required: a.nrows(),
        });
    }
    Ok(())
}

/// Solves `a x = b` for square nonsingular `a` via LU with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>, which: &'static str) -> Result<DMatrix<f64>> {
    if a.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            what: "square system",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "right-hand side rows",
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    require_full_row_rank(a, which, &NumericSettings::DEFAULT)?;
    a.clone().lu().solve(b).ok_or(Error::RankDeficient {
        which,
        rank: 0,
        required: a.nrows(),
    })
}

pub fn solve_vec(a: &DMatrix<f64>, b: &DVector<f64>, which: &'static str) -> Result<DVector<f64>> {
    let rhs = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    let x = solve(a, &rhs, which)?;
    Ok(x.column(0).into_owned())
}
