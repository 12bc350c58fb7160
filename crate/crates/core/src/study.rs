//! Convergence studies: sweep the set size `beta`, measure the Hessian error
//! against the analytic Hessian, compare with the a-priori bound and fit the
//! empirical order of accuracy.

use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::approx::nested_set_hessian;
use crate::bounds::{error_bound_nsh, BoundInputs, NormKind, SetFactors};
use crate::calculus::{
    calculus_error_bound, power_hessian, product_hessian, quotient_hessian, CalcBoundInputs,
    CalcMode, CalcResult, FunctionBoundData, Rule,
};
use crate::eval::EvaluationCache;
use crate::linalg;
use crate::registry::{self, TestFunction};
use crate::sets::canonical_set;
use crate::{Error, Result};

/// CSV header of [`ConvergenceReport::write_csv`].
pub const CSV_HEADER: &str = "beta,error_spec,error_fro,bound,evals";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Estimator {
    NestedSet,
    Calculus(CalcKind, CalcMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CalcKind {
    Product,
    Quotient,
    Power,
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "nested-set" {
            return Ok(Estimator::NestedSet);
        }
        let (kind, mode) = s
            .rsplit_once('-')
            .ok_or_else(|| Error::Config(format!("unknown estimator {s:?}")))?;
        let kind = match kind {
            "product" => CalcKind::Product,
            "quotient" => CalcKind::Quotient,
            "power" => CalcKind::Power,
            _ => return Err(Error::Config(format!("unknown estimator {s:?}"))),
        };
        let mode = match mode {
            "sc" => CalcMode::Simplex,
            "qc" => CalcMode::Quadratic,
            _ => return Err(Error::Config(format!("unknown estimator mode in {s:?}"))),
        };
        Ok(Estimator::Calculus(kind, mode))
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Estimator::NestedSet => f.write_str("nested-set"),
            Estimator::Calculus(kind, mode) => {
                let k = match kind {
                    CalcKind::Product => "product",
                    CalcKind::Quotient => "quotient",
                    CalcKind::Power => "power",
                };
                let m = match mode {
                    CalcMode::Simplex => "sc",
                    CalcMode::Quadratic => "qc",
                };
                write!(f, "{k}-{m}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    /// Registry name; products and quotients take `"f,g"`.
    pub function: String,
    pub dim: usize,
    /// Canonical set index, `0..=dim`.
    pub k: usize,
    /// Defaults to `0.5 * ones(dim)`.
    pub x0: Option<Vec<f64>>,
    pub beta_start: f64,
    pub beta_ratio: f64,
    pub beta_steps: usize,
    /// Explicit schedule; overrides the geometric one.
    pub betas: Option<Vec<f64>>,
    pub estimator: Estimator,
    /// Exponent for the power estimators.
    pub power: u32,
    pub symmetrize: bool,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            function: "cubes".into(),
            dim: 3,
            k: 0,
            x0: None,
            beta_start: 1e-1,
            beta_ratio: 0.5,
            beta_steps: 12,
            betas: None,
            estimator: Estimator::NestedSet,
            power: 2,
            symmetrize: false,
            seed: 0,
        }
    }
}

impl StudyConfig {
    /// Betas in decreasing order.
    pub fn schedule(&self) -> Result<Vec<f64>> {
        let mut betas = match &self.betas {
            Some(b) => b.clone(),
            None => {
                if !(self.beta_ratio > 0.0 && self.beta_ratio < 1.0) {
                    return Err(Error::Config(format!(
                        "beta ratio must lie in (0, 1), got {}",
                        self.beta_ratio
                    )));
                }
                (0..self.beta_steps)
                    .map(|i| self.beta_start * self.beta_ratio.powi(i as i32))
                    .collect()
            }
        };
        if betas.is_empty() {
            return Err(Error::Config("empty beta schedule".into()));
        }
        if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::Config(format!("beta must be positive and finite, got {b}")));
        }
        betas.sort_by(|a, b| b.total_cmp(a));
        Ok(betas)
    }

    pub fn point(&self) -> Result<DVector<f64>> {
        match &self.x0 {
            Some(v) if v.len() != self.dim => Err(Error::Config(format!(
                "x0 has {} entries but dim is {}",
                v.len(),
                self.dim
            ))),
            Some(v) => Ok(DVector::from_column_slice(v)),
            None => Ok(DVector::from_element(self.dim, 0.5)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    pub beta: f64,
    pub error_spec: f64,
    pub error_fro: f64,
    pub bound: f64,
    pub evals: usize,
    /// Error level attributable to rounding at this `beta`.
    pub noise_floor: f64,
}

impl StudyRow {
    pub fn within_bound(&self) -> bool {
        self.error_spec <= self.bound + self.noise_floor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedOrder {
    /// Every error sits below the noise floor.
    Exact,
    /// `error ~ kappa * beta^order`.
    Slope { order: f64, kappa: f64 },
    /// Fewer than two rows above the floor.
    Insufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub function: String,
    pub estimator: String,
    pub dim: usize,
    pub k: usize,
    pub rows: Vec<StudyRow>,
    pub fitted: FittedOrder,
}

impl ConvergenceReport {
    pub fn all_within_bound(&self) -> bool {
        self.rows.iter().all(StudyRow::within_bound)
    }

    /// Every row within its bound and an order of at least `min_order`
    /// (or exact).
    pub fn passes(&self, min_order: f64) -> bool {
        let order_ok = match self.fitted {
            FittedOrder::Exact => true,
            FittedOrder::Slope { order, .. } => order >= min_order,
            FittedOrder::Insufficient => false,
        };
        order_ok && self.all_within_bound()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER.split(','))?;
        for r in &self.rows {
            w.write_record([
                r.beta.to_string(),
                r.error_spec.to_string(),
                r.error_fro.to_string(),
                r.bound.to_string(),
                r.evals.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Ordinary least squares of `log error` on `log beta` over rows whose
/// error exceeds `floor`.
pub fn fit_order(betas: &[f64], errors: &[f64], floors: &[f64]) -> FittedOrder {
    let pts: Vec<(f64, f64)> = betas
        .iter()
        .zip(errors)
        .zip(floors)
        .filter(|((_, e), fl)| **e > **fl)
        .map(|((b, e), _)| (b.ln(), e.ln()))
        .collect();
    if pts.is_empty() {
        return FittedOrder::Exact;
    }
    if pts.len() < 2 {
        return FittedOrder::Insufficient;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return FittedOrder::Insufficient;
    }
    let order = sxy / sxx;
    FittedOrder::Slope {
        order,
        kappa: (my - order * mx).exp(),
    }
}

/// Base function(s) and the composite whose Hessian is the reference.
struct Target {
    f: TestFunction,
    g: Option<TestFunction>,
    composite: TestFunction,
}

fn resolve(config: &StudyConfig) -> Result<Target> {
    let names: Vec<&str> = config.function.split(',').map(str::trim).collect();
    let get = |n: &str, salt: u64| registry::lookup(n, config.dim, config.seed.wrapping_add(salt));
    match (config.estimator, names.as_slice()) {
        (Estimator::NestedSet, [name]) => {
            let f = get(name, 0)?;
            Ok(Target {
                composite: f.clone(),
                f,
                g: None,
            })
        }
        (Estimator::Calculus(CalcKind::Power, _), [name]) => {
            let f = get(name, 0)?;
            Ok(Target {
                composite: TestFunction::power(&f, config.power)?,
                f,
                g: None,
            })
        }
        (Estimator::Calculus(kind @ (CalcKind::Product | CalcKind::Quotient), _), [a, b]) => {
            let f = get(a, 0)?;
            let g = get(b, 1)?;
            let composite = if kind == CalcKind::Product {
                TestFunction::product(&f, &g)?
            } else {
                TestFunction::quotient(&f, &g)?
            };
            Ok(Target {
                f,
                g: Some(g),
                composite,
            })
        }
        (est, _) => Err(Error::Config(format!(
            "estimator {est} does not take function list {:?}",
            config.function
        ))),
    }
}

/// Rounding-level error of a nested-set Hessian built from values of size
/// `fmax`: each entry mixes four values through `(S^T)^+` and `(T^T)^+`.
fn rounding_floor(fmax: f64, sets: &SetFactors) -> f64 {
    const SAFETY: f64 = 16.0;
    SAFETY * 8.0 * f64::EPSILON * fmax * ((sets.m * sets.k) as f64).sqrt() * sets.norm_s_pinv
        * sets.norm_t_pinv
        / (sets.delta_s * sets.delta_t)
}

fn max_abs_value(cache: &EvaluationCache<'_>) -> f64 {
    cache.entries().map(|(_, v)| v.abs()).fold(0.0, f64::max)
}

fn calc_data(
    part: &crate::calculus::Component,
    truth: &TestFunction,
    x0: &DVector<f64>,
    radius: f64,
) -> Result<FunctionBoundData> {
    let l = truth
        .lipschitz(x0, radius)
        .ok_or(Error::MissingLipschitz("registry function"))?;
    Ok(FunctionBoundData::from_component(
        part,
        Some(truth.gradient(x0).norm()),
        Some(l.grad),
        Some(l.hess),
    ))
}

/// Runs one estimator over the beta schedule. Each beta uses fresh caches.
pub fn run_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    if config.dim == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    if config.k > config.dim {
        return Err(Error::Config(format!("k = {} exceeds dim = {}", config.k, config.dim)));
    }
    let betas = config.schedule()?;
    let x0 = config.point()?;
    let target = resolve(config)?;
    let exact = target.composite.hessian(&x0);
    let base_floor = 1e-12 * (1.0 + linalg::spectral_norm(&exact));

    let mut rows = Vec::with_capacity(betas.len());
    for &beta in &betas {
        let row = study_row(config, &target, &x0, &exact, beta)
            .map_err(|e| Error::Config(format!("beta = {beta}: {e}")))?;
        rows.push(StudyRow {
            noise_floor: row.noise_floor + base_floor,
            ..row
        });
    }
    let fitted = fit_order(
        &rows.iter().map(|r| r.beta).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.error_spec).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.noise_floor).collect::<Vec<_>>(),
    );
    Ok(ConvergenceReport {
        function: target.composite.name().to_string(),
        estimator: config.estimator.to_string(),
        dim: config.dim,
        k: config.k,
        rows,
        fitted,
    })
}

fn study_row(
    config: &StudyConfig,
    target: &Target,
    x0: &DVector<f64>,
    exact: &DMatrix<f64>,
    beta: f64,
) -> Result<StudyRow> {
    let (s, t) = canonical_set(config.dim, config.k, beta)?;
    let sets = SetFactors::from_sets(x0, &s, &t, NormKind::Spectral)?;
    let radius = sets.delta_s + sets.delta_t;
    let f_oracle = target.f.oracle();
    let mut fc = EvaluationCache::new(f_oracle);

    let (hessian, evals, bound, floor) = match config.estimator {
        Estimator::NestedSet => {
            let r = nested_set_hessian(x0, &s, &t, &mut fc, config.symmetrize)?;
            let l = target
                .f
                .lipschitz(x0, radius)
                .ok_or(Error::MissingLipschitz("registry function"))?;
            let bound = error_bound_nsh(&BoundInputs::from_sets(&s, &t, l.grad, l.hess, NormKind::Spectral)?)?;
            let floor = rounding_floor(max_abs_value(&fc), &sets);
            (r.hessian, r.eval_count, bound, floor)
        }
        Estimator::Calculus(kind, mode) => {
            let g_oracle = target.g.as_ref().map(|g| g.oracle());
            let mut gc = g_oracle.map(EvaluationCache::new);
            let sym = config.symmetrize;
            let (res, rule): (CalcResult, Rule) = match (kind, gc.as_mut()) {
                (CalcKind::Product, Some(gc)) => {
                    (product_hessian(&mut fc, gc, x0, &s, &t, mode, sym)?, Rule::Product)
                }
                (CalcKind::Quotient, Some(gc)) => {
                    (quotient_hessian(&mut fc, gc, x0, &s, &t, mode, sym)?, Rule::Quotient)
                }
                (CalcKind::Power, None) => (
                    power_hessian(&mut fc, x0, &s, &t, config.power, mode, sym)?,
                    Rule::Power(config.power),
                ),
                _ => return Err(Error::Config("estimator and function list disagree".into())),
            };
            let f_data = calc_data(&res.f, &target.f, x0, radius)?;
            let g_data = match (&res.g, &target.g) {
                (Some(part), Some(truth)) => Some(calc_data(part, truth, x0, radius)?),
                _ => None,
            };
            let bound = calculus_error_bound(
                rule,
                mode,
                &CalcBoundInputs {
                    sets,
                    f: f_data,
                    g: g_data,
                },
            )?;
            let rf = rounding_floor(max_abs_value(&fc), &sets);
            let rg = gc
                .as_ref()
                .map(|c| rounding_floor(max_abs_value(c), &sets))
                .unwrap_or(0.0);
            let fv = res.f.value.abs();
            let gv = res.g.as_ref().map(|g| g.value.abs()).unwrap_or(0.0);
            let floor = match rule {
                Rule::Product => rf * gv + rg * fv,
                Rule::Quotient => rf / gv + rg * fv / (gv * gv),
                Rule::Power(p) => p as f64 * fv.powi(p as i32 - 1) * rf,
            };
            (res.result.hessian, res.result.eval_count, bound, floor)
        }
    };

    let diff = &hessian - exact;
    Ok(StudyRow {
        beta,
        error_spec: linalg::spectral_norm(&diff),
        error_fro: linalg::frobenius_norm(&diff),
        bound,
        evals,
        noise_floor: floor,
    })
}
