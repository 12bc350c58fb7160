//! Quadratic interpolation models.
//!
//! Two routes produce the same model over a minimal poised set
//! `M(x0; S, U_k)`: closed-form difference formulas that reuse the nested-set
//! Hessian evaluations, and a general square-system interpolator used as its
//! reference.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::approx::Touched;
use crate::eval::EvaluationCache;
use crate::linalg;
use crate::sets::{
    build_uk, centroid_and_radius, interpolation_matrix, quadratic_basis_size, DirectionSet,
    PointSet,
};
use crate::{Error, NumericSettings, Result};

/// `Q(x) = alpha0 + alpha^T x + x^T H x / 2` with `H` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub alpha0: f64,
    pub alpha: DVector<f64>,
    hessian: DMatrix<f64>,
}

/// Flat record: `alpha0`, `alpha`, and the upper triangle of `H` row by row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatModel {
    pub alpha0: f64,
    pub alpha: Vec<f64>,
    pub hessian_upper: Vec<f64>,
}

impl QuadraticModel {
    /// The Hessian is stored as `(H + H^T) / 2`.
    pub fn new(alpha0: f64, alpha: DVector<f64>, hessian: DMatrix<f64>) -> Result<Self> {
        let n = alpha.len();
        if hessian.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                what: "model Hessian",
                expected: n,
                got: hessian.nrows(),
            });
        }
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        Ok(Self {
            alpha0,
            alpha,
            hessian,
        })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            alpha0: 0.0,
            alpha: DVector::zeros(n),
            hessian: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.alpha0 + self.alpha.dot(x) + 0.5 * x.dot(&(&self.hessian * x))
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.alpha + &self.hessian * x
    }

    pub fn flat(&self) -> FlatModel {
        let n = self.dim();
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(self.hessian[(i, j)]);
            }
        }
        FlatModel {
            alpha0: self.alpha0,
            alpha: self.alpha.iter().copied().collect(),
            hessian_upper: upper,
        }
    }

    /// `alpha0,alpha1..alphan,h11,h12,..,hnn` (upper triangle).
    pub fn csv_header(n: usize) -> Vec<String> {
        let mut h = vec!["alpha0".to_string()];
        h.extend((1..=n).map(|i| format!("alpha{i}")));
        for i in 1..=n {
            for j in i..=n {
                h.push(format!("h{i}{j}"));
            }
        }
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let flat = self.flat();
        std::iter::once(flat.alpha0)
            .chain(flat.alpha)
            .chain(flat.hessian_upper)
            .map(|v| v.to_string())
            .collect()
    }
}

/// `alpha + H x`.
pub fn model_gradient(q: &QuadraticModel, x: &DVector<f64>) -> DVector<f64> {
    q.gradient(x)
}

/// Natural quadratic basis `[1, z_1..z_n, z_i^2 / 2 (i == j), z_i z_j (i < j)]`
/// with the quadratic terms ordered row by row over the upper triangle.
pub fn quadratic_basis(z: &DVector<f64>) -> DVector<f64> {
    let n = z.len();
    let mut phi = DVector::zeros(quadratic_basis_size(n));
    phi[0] = 1.0;
    for i in 0..n {
        phi[1 + i] = z[i];
    }
    let mut idx = n + 1;
    for i in 0..n {
        for j in i..n {
            phi[idx] = if i == j { 0.5 * z[i] * z[i] } else { z[i] * z[j] };
            idx += 1;
        }
    }
    phi
}

/// Unique quadratic through `(points[i], values[i])`.
///
/// Coordinates are centered at the centroid and divided by the set radius
/// before solving; the coefficients are mapped back afterwards.
pub fn interpolate_general(points: &PointSet, values: &[f64]) -> Result<QuadraticModel> {
    let n = points.dim();
    let p = quadratic_basis_size(n);
    if points.len() != p {
        return Err(Error::WrongCardinality {
            expected: p,
            got: points.len(),
        });
    }
    if values.len() != p {
        return Err(Error::DimensionMismatch {
            what: "values",
            expected: p,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("values"));
    }
    let (c, r) = centroid_and_radius(points);
    if r <= 0.0 {
        return Err(Error::NotPoised);
    }
    let phi = interpolation_matrix(points, &c, r);
    if linalg::rank(&phi, NumericSettings::DEFAULT.poised_tol) < p {
        return Err(Error::NotPoised);
    }
    let rhs = DVector::from_column_slice(values);
    let coef = phi.lu().solve(&rhs).ok_or(Error::NotPoised)?;

    // Model in scaled coordinates z = (x - c) / r.
    let a0 = coef[0];
    let b = DVector::from_iterator(n, (0..n).map(|i| coef[1 + i]));
    let mut g = DMatrix::zeros(n, n);
    let mut idx = n + 1;
    for i in 0..n {
        for j in i..n {
            g[(i, j)] = coef[idx];
            g[(j, i)] = coef[idx];
            idx += 1;
        }
    }

    let hessian = g / (r * r);
    let lin = b / r;
    let alpha = &lin - &hessian * &c;
    let alpha0 = a0 - lin.dot(&c) + 0.5 * c.dot(&(&hessian * &c));
    QuadraticModel::new(alpha0, alpha, hessian)
}

/// Closed-form model over `M(x0; S, U_k)` built from difference formulas on
/// the scaled Hessian `S^T H S`. All values come from `cache`; after a
/// nested-set Hessian over the same `(x0, S, U_k)` no new points are needed.
pub fn interpolate_minimal(
    x0: &DVector<f64>,
    s: &DirectionSet,
    k: usize,
    cache: &mut EvaluationCache<'_>,
) -> Result<QuadraticModel> {
    interpolate_minimal_tracked(x0, s, k, cache, &mut Touched::default())
}

pub(crate) fn interpolate_minimal_tracked(
    x0: &DVector<f64>,
    s: &DirectionSet,
    k: usize,
    cache: &mut EvaluationCache<'_>,
    touched: &mut Touched,
) -> Result<QuadraticModel> {
    let n = s.dim();
    let u = build_uk(s, k)?;
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            what: "x0",
            expected: n,
            got: x0.len(),
        });
    }
    linalg::require_full_row_rank(s.matrix(), "S", &NumericSettings::DEFAULT)?;

    let f0 = touched.eval(cache, x0)?;
    let mut fs = vec![0.0; n];
    let mut fu = vec![0.0; n];
    for i in 0..n {
        fs[i] = touched.eval(cache, &(x0 + s.matrix().column(i)))?;
        fu[i] = touched.eval(cache, &(x0 + u.matrix().column(i)))?;
    }
    // f((x0 + s^i) + u^j), only for i <= j
    let mut fsu = DMatrix::zeros(n, n);
    for i in 0..n {
        let base = x0 + s.matrix().column(i);
        for j in i..n {
            if k >= 1 && (i == k - 1 || j == k - 1) {
                continue;
            }
            fsu[(i, j)] = touched.eval(cache, &(&base + u.matrix().column(j)))?;
        }
    }

    let mut hhat = DMatrix::zeros(n, n);
    if k == 0 {
        for i in 0..n {
            hhat[(i, i)] = fsu[(i, i)] - 2.0 * fs[i] + f0;
            for j in (i + 1)..n {
                let v = fsu[(i, j)] - fs[i] - fs[j] + f0;
                hhat[(i, j)] = v;
                hhat[(j, i)] = v;
            }
        }
    } else {
        let p = k - 1;
        let f_minus = fu[p];
        hhat[(p, p)] = fs[p] + f_minus - 2.0 * f0;
        for i in (0..n).filter(|&i| i != p) {
            let v = -fu[i] + fs[i] + f_minus - f0;
            hhat[(i, p)] = v;
            hhat[(p, i)] = v;
            hhat[(i, i)] = fsu[(i, i)] - 2.0 * fu[i] + f_minus;
            for j in ((i + 1)..n).filter(|&j| j != p) {
                let v = fsu[(i, j)] - fu[i] - fu[j] + f_minus;
                hhat[(i, j)] = v;
                hhat[(j, i)] = v;
            }
        }
    }

    // H = S^{-T} Hhat S^{-1}, via two transposed solves.
    let st = s.matrix().transpose();
    let y = linalg::solve(&st, &hhat, "S")?;
    let hessian = linalg::solve(&st, &y.transpose(), "S")?.transpose();
    let hessian = (&hessian + hessian.transpose()) * 0.5;

    let mut alpha_bar = DVector::zeros(n);
    for i in 0..n {
        let si = s.column(i);
        alpha_bar[i] = fs[i] - f0 - 0.5 * hhat[(i, i)] - x0.dot(&(&hessian * &si));
    }
    let alpha = linalg::solve_vec(&st, &alpha_bar, "S")?;
    let alpha0 = f0 - alpha.dot(x0) - 0.5 * x0.dot(&(&hessian * x0));
    QuadraticModel::new(alpha0, alpha, hessian)
}

/// `|Qhat^{-1}|`, where `Qhat` is the interpolation matrix of `points`
/// centered at `center` and divided by the largest distance to it.
pub fn scaled_inverse_norm(points: &PointSet, center: &DVector<f64>) -> Result<f64> {
    let radius = points
        .points()
        .iter()
        .map(|p| (p - center).norm())
        .fold(0.0, f64::max);
    if radius <= 0.0 {
        return Err(Error::NotPoised);
    }
    let q = interpolation_matrix(points, center, radius);
    if !q.is_square() {
        return Err(Error::WrongCardinality {
            expected: q.ncols(),
            got: q.nrows(),
        });
    }
    let sv = linalg::singular_values(&q);
    match sv.last() {
        Some(&smin) if smin > NumericSettings::DEFAULT.poised_tol * sv[0] => Ok(1.0 / smin),
        _ => Err(Error::NotPoised),
    }
}
