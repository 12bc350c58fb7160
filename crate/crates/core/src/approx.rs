//! Generalized simplex gradients and nested-set Hessians.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::eval::EvaluationCache;
use crate::linalg::{self, ensure_finite_vec, require_full_row_rank};
use crate::sets::{check_dims, DirectionSet};
use crate::{Error, NumericSettings, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GradientResult {
    pub gradient: DVector<f64>,
    /// Radius of the direction set `T`.
    pub set_radius: f64,
    /// Distinct points touched by this computation.
    pub eval_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianResult {
    /// Row-major when serialized through [`HessianResult::rows`].
    #[serde(serialize_with = "serialize_matrix")]
    pub hessian: DMatrix<f64>,
    pub delta_u: f64,
    pub delta_l: f64,
    pub eval_count: usize,
    pub symmetrized: bool,
    /// Theoretical error bound, when the caller supplied the data for one.
    pub bound: Option<f64>,
}

fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in 0..m.nrows() {
        let row: Vec<f64> = m.row(r).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

impl HessianResult {
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.hessian.nrows())
            .map(|r| self.hessian.row(r).iter().copied().collect())
            .collect()
    }
}

/// Evaluation bookkeeping shared by the estimators: remembers which distinct
/// cache entries a computation touched.
#[derive(Debug, Default)]
pub(crate) struct Touched(BTreeSet<usize>);

impl Touched {
    pub(crate) fn eval(&mut self, cache: &mut EvaluationCache<'_>, x: &DVector<f64>) -> Result<f64> {
        let (id, v) = cache.evaluate_indexed(x)?;
        self.0.insert(id);
        Ok(v)
    }

    pub(crate) fn count(&self) -> usize {
        self.0.len()
    }
}

fn delta_f_tracked(
    x0: &DVector<f64>,
    t: &DirectionSet,
    cache: &mut EvaluationCache<'_>,
    touched: &mut Touched,
) -> Result<DVector<f64>> {
    let f0 = touched.eval(cache, x0)?;
    let mut out = DVector::zeros(t.len());
    for j in 0..t.len() {
        let xj = x0 + t.matrix().column(j);
        out[j] = touched.eval(cache, &xj)? - f0;
    }
    Ok(out)
}

/// `[f(x0 + t^j) - f(x0)]_j`.
pub fn delta_f(
    x0: &DVector<f64>,
    t: &DirectionSet,
    cache: &mut EvaluationCache<'_>,
) -> Result<DVector<f64>> {
    if x0.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            what: "x0",
            expected: t.dim(),
            got: x0.len(),
        });
    }
    delta_f_tracked(x0, t, cache, &mut Touched::default())
}

/// Generalized simplex gradient `(T^T)^+ delta_f(x0; T)`. `T` must have full
/// row rank (determined or overdetermined).
pub fn simplex_gradient(
    x0: &DVector<f64>,
    t: &DirectionSet,
    cache: &mut EvaluationCache<'_>,
) -> Result<GradientResult> {
    if x0.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            what: "x0",
            expected: t.dim(),
            got: x0.len(),
        });
    }
    ensure_finite_vec(x0, "x0")?;
    require_full_row_rank(t.matrix(), "T", &NumericSettings::DEFAULT)?;
    let pinv_tt = linalg::pseudoinverse(&t.matrix().transpose())?;
    let mut touched = Touched::default();
    let delta = delta_f_tracked(x0, t, cache, &mut touched)?;
    Ok(GradientResult {
        gradient: pinv_tt * delta,
        set_radius: t.radius(),
        eval_count: touched.count(),
    })
}

/// Nested-set Hessian `(S^T)^+ delta_{grad}`, where row `i` of the difference
/// matrix is `grad_s f(x0 + s^i; T) - grad_s f(x0; T)`.
///
/// The raw matrix is generally not symmetric; pass `symmetrize = true` to get
/// `(H + H^T) / 2` instead.
pub fn nested_set_hessian(
    x0: &DVector<f64>,
    s: &DirectionSet,
    t: &DirectionSet,
    cache: &mut EvaluationCache<'_>,
    symmetrize: bool,
) -> Result<HessianResult> {
    check_dims(x0, s, t)?;
    ensure_finite_vec(x0, "x0")?;
    let settings = NumericSettings::DEFAULT;
    require_full_row_rank(s.matrix(), "S", &settings)?;
    require_full_row_rank(t.matrix(), "T", &settings)?;

    let pinv_tt = linalg::pseudoinverse(&t.matrix().transpose())?;
    let pinv_st = linalg::pseudoinverse(&s.matrix().transpose())?;
    let n = x0.len();
    let mut touched = Touched::default();

    let g0 = &pinv_tt * delta_f_tracked(x0, t, cache, &mut touched)?;
    let mut diffs = DMatrix::zeros(s.len(), n);
    for i in 0..s.len() {
        let xi = x0 + s.matrix().column(i);
        let gi = &pinv_tt * delta_f_tracked(&xi, t, cache, &mut touched)?;
        diffs.row_mut(i).copy_from(&(gi - &g0).transpose());
    }

    let mut hessian = pinv_st * diffs;
    if symmetrize {
        hessian = (&hessian + hessian.transpose()) * 0.5;
    }
    Ok(HessianResult {
        hessian,
        delta_u: s.radius().max(t.radius()),
        delta_l: s.radius().min(t.radius()),
        eval_count: touched.count(),
        symmetrized: symmetrize,
        bound: None,
    })
}
