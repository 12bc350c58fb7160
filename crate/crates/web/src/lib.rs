//! Browser bindings. Each export returns a JSON string; the plain functions
//! behind them are usable natively as well.

use nshess::approx::nested_set_hessian;
use nshess::bounds::{error_bound_nsh, BoundInputs, NormKind};
use nshess::eval::EvaluationCache;
use nshess::linalg::spectral_norm;
use nshess::registry;
use nshess::sets::{canonical_set, is_minimal_nshc, is_poised_quadratic, nshc_points};
use nshess::study::{run_study, ConvergenceReport, StudyConfig};
use nshess::{DMatrix, DVector};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct PlaneSet {
    pub points: Vec<[f64; 2]>,
    pub poised: bool,
    pub minimal: bool,
}

/// Sample points of the canonical planar set `(k, beta)` around `(x, y)`.
pub fn plane_set(k: usize, beta: f64, x: f64, y: f64) -> nshess::Result<PlaneSet> {
    let x0 = DVector::from_vec(vec![x, y]);
    let (s, t) = canonical_set(2, k, beta)?;
    let pts = nshc_points(&x0, &s, &t)?;
    Ok(PlaneSet {
        points: pts.points().iter().map(|p| [p[0], p[1]]).collect(),
        poised: is_poised_quadratic(&pts)?,
        minimal: is_minimal_nshc(&pts, &x0)?.is_some(),
    })
}

pub fn convergence(function: &str, dim: usize, k: usize, estimator: &str, steps: usize) -> nshess::Result<ConvergenceReport> {
    let config = StudyConfig {
        function: function.into(),
        dim,
        k,
        estimator: estimator.parse()?,
        beta_steps: steps,
        ..StudyConfig::default()
    };
    run_study(&config)
}

#[derive(Debug, Serialize)]
pub struct OneShot {
    pub hessian: Vec<Vec<f64>>,
    pub exact: Vec<Vec<f64>>,
    pub error: f64,
    pub bound: Option<f64>,
    pub evals: usize,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Nested-set Hessian at `x0` for a registry function.
pub fn one_shot(function: &str, x0: &[f64], k: usize, beta: f64) -> nshess::Result<OneShot> {
    let n = x0.len();
    let f = registry::lookup(function, n, 0)?;
    let x0 = DVector::from_column_slice(x0);
    let (s, t) = canonical_set(n, k, beta)?;
    let mut cache = EvaluationCache::new(f.oracle());
    let est = nested_set_hessian(&x0, &s, &t, &mut cache, false)?;
    let exact = f.hessian(&x0);
    let bound = match f.lipschitz(&x0, s.radius() + t.radius()) {
        Some(l) => Some(error_bound_nsh(&BoundInputs::from_sets(&s, &t, l.grad, l.hess, NormKind::Spectral)?)?),
        None => None,
    };
    Ok(OneShot {
        error: spectral_norm(&(&est.hessian - &exact)),
        hessian: rows(&est.hessian),
        exact: rows(&exact),
        bound,
        evals: est.eval_count,
    })
}

fn to_json<T: Serialize>(r: nshess::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = planeSet)]
pub fn plane_set_js(k: usize, beta: f64, x: f64, y: f64) -> Result<String, JsError> {
    to_json(plane_set(k, beta, x, y))
}

#[wasm_bindgen(js_name = convergence)]
pub fn convergence_js(function: &str, dim: usize, k: usize, estimator: &str, steps: usize) -> Result<String, JsError> {
    to_json(convergence(function, dim, k, estimator, steps))
}

#[wasm_bindgen(js_name = oneShot)]
pub fn one_shot_js(function: &str, x0: &[f64], k: usize, beta: f64) -> Result<String, JsError> {
    to_json(one_shot(function, x0, k, beta))
}
