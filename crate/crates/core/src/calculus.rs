//! Calculus-rule Hessians for products, quotients and integer powers.
//!
//! Each rule combines per-function pieces evaluated at `x0`: the value, a
//! nested-set Hessian and a gradient substitute. In [`CalcMode::Simplex`] the
//! gradient is the generalized simplex gradient over `T`; in
//! [`CalcMode::Quadratic`] it is the gradient at `x0` of the quadratic
//! interpolating `f` over the evaluation points, which must be poised.
//!
//! `f` and `g` use their own caches. All points needed for the gradients are
//! already touched by the Hessians, so no extra evaluations occur.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::approx::{nested_set_hessian, simplex_gradient, HessianResult};
use crate::bounds::{nsh_constant, SetFactors};
use crate::eval::EvaluationCache;
use crate::quadmodel::interpolate_general;
use crate::sets::{check_dims, nshc_points, DirectionSet};
use crate::{Error, NumericSettings, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CalcMode {
    Simplex,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Product,
    Quotient,
    Power(u32),
}

/// Per-function pieces at `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub value: f64,
    /// Simplex gradient or model gradient, depending on the mode.
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalcResult {
    pub result: HessianResult,
    pub f: Component,
    pub g: Option<Component>,
}

fn component(
    cache: &mut EvaluationCache<'_>,
    x0: &DVector<f64>,
    s: &DirectionSet,
    t: &DirectionSet,
    mode: CalcMode,
    symmetrize: bool,
) -> Result<(Component, HessianResult)> {
    let h = nested_set_hessian(x0, s, t, cache, symmetrize)?;
    let value = cache.evaluate(x0)?;
    let gradient = match mode {
        CalcMode::Simplex => simplex_gradient(x0, t, cache)?.gradient,
        CalcMode::Quadratic => {
            let pts = nshc_points(x0, s, t)?;
            let mut vals = Vec::with_capacity(pts.len());
            for p in pts.points() {
                vals.push(cache.evaluate(p)?);
            }
            interpolate_general(&pts, &vals)?.gradient(x0)
        }
    };
    Ok((
        Component {
            value,
            gradient,
            hessian: h.hessian.clone(),
        },
        h,
    ))
}

fn outer_sym(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    a * b.transpose() + b * a.transpose()
}

fn assemble(hessian: DMatrix<f64>, parts: &[&HessianResult], symmetrize: bool) -> HessianResult {
    HessianResult {
        hessian,
        delta_u: parts[0].delta_u,
        delta_l: parts[0].delta_l,
        eval_count: parts.iter().map(|p| p.eval_count).sum(),
        symmetrized: symmetrize,
        bound: None,
    }
}

/// `H_f g + G_f G_g^T + G_g G_f^T + H_g f`.
pub fn product_hessian(
    f: &mut EvaluationCache<'_>,
    g: &mut EvaluationCache<'_>,
    x0: &DVector<f64>,
    s: &DirectionSet,
    t: &DirectionSet,
    mode: CalcMode,
    symmetrize: bool,
) -> Result<CalcResult> {
    check_dims(x0, s, t)?;
    let (cf, hf) = component(f, x0, s, t, mode, symmetrize)?;
    let (cg, hg) = component(g, x0, s, t, mode, symmetrize)?;
    let h = &cf.hessian * cg.value
        + outer_sym(&cf.gradient, &cg.gradient)
        + &cg.hessian * cf.value;
    Ok(CalcResult {
        result: assemble(h, &[&hf, &hg], symmetrize),
        f: cf,
        g: Some(cg),
    })
}

/// `(1/g^3) [g^2 H_f - f g H_g + 2 f G_g G_g^T - g (G_f G_g^T + G_g G_f^T)]`.
pub fn quotient_hessian(
    f: &mut EvaluationCache<'_>,
    g: &mut EvaluationCache<'_>,
    x0: &DVector<f64>,
    s: &DirectionSet,
    t: &DirectionSet,
    mode: CalcMode,
    symmetrize: bool,
) -> Result<CalcResult> {
    check_dims(x0, s, t)?;
    let g0 = g.evaluate(x0)?;
    if g0.abs() < NumericSettings::DEFAULT.division_floor {
        return Err(Error::DivisionByZero(g0));
    }
    let (cf, hf) = component(f, x0, s, t, mode, symmetrize)?;
    let (cg, hg) = component(g, x0, s, t, mode, symmetrize)?;
    let (fv, gv) = (cf.value, cg.value);
    let inner = &cf.hessian * (gv * gv) - &cg.hessian * (fv * gv)
        + (&cg.gradient * cg.gradient.transpose()) * (2.0 * fv)
        - outer_sym(&cf.gradient, &cg.gradient) * gv;
    Ok(CalcResult {
        result: assemble(inner / (gv * gv * gv), &[&hf, &hg], symmetrize),
        f: cf,
        g: Some(cg),
    })
}

/// `p f^{p-1} H_f + p (p-1) f^{p-2} G G^T` for integer `p >= 2`.
pub fn power_hessian(
    f: &mut EvaluationCache<'_>,
    x0: &DVector<f64>,
    s: &DirectionSet,
    t: &DirectionSet,
    p: u32,
    mode: CalcMode,
    symmetrize: bool,
) -> Result<CalcResult> {
    if p < 2 {
        return Err(Error::InvalidPower(p));
    }
    check_dims(x0, s, t)?;
    let (cf, hf) = component(f, x0, s, t, mode, symmetrize)?;
    let pf = p as f64;
    let e = p as i32;
    let h = &cf.hessian * (pf * cf.value.powi(e - 1))
        + (&cf.gradient * cf.gradient.transpose()) * (pf * (pf - 1.0) * cf.value.powi(e - 2));
    Ok(CalcResult {
        result: assemble(h, &[&hf], symmetrize),
        f: cf,
        g: None,
    })
}

/// Per-function data for [`calculus_error_bound`]. Optional fields that a
/// rule needs but are absent either skip an `M` candidate or fail the call.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FunctionBoundData {
    /// `f(x0)`
    pub value: f64,
    /// `|grad f(x0)|`
    pub grad_norm: Option<f64>,
    /// Norm of the mode's gradient substitute at `x0`.
    pub approx_grad_norm: Option<f64>,
    pub l_grad: Option<f64>,
    pub l_hess: Option<f64>,
    /// Overrides the default model-gradient constant in quadratic mode.
    pub e_grad_q: Option<f64>,
}

impl FunctionBoundData {
    pub fn from_component(c: &Component, grad_norm: Option<f64>, l_grad: Option<f64>, l_hess: Option<f64>) -> Self {
        Self {
            value: c.value,
            grad_norm,
            approx_grad_norm: Some(c.gradient.norm()),
            l_grad,
            l_hess,
            e_grad_q: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalcBoundInputs {
    pub sets: SetFactors,
    pub f: FunctionBoundData,
    /// Required for products and quotients.
    pub g: Option<FunctionBoundData>,
}

/// `E` with `|H_s f - H f| <= E * Delta_u`.
pub fn hessian_constant(sets: &SetFactors, fd: &FunctionBoundData, who: &'static str) -> Result<f64> {
    let l = fd.l_hess.ok_or(Error::MissingLipschitz(who))?;
    nsh_constant(&sets.bound_inputs(0.0, l))
}

/// `E` with `|G - grad f| <= E * Delta_u^d`, where `d = 1` in simplex mode
/// (`G` the simplex gradient) and `d = 2` in quadratic mode (`G` the model
/// gradient).
pub fn gradient_constant(
    sets: &SetFactors,
    fd: &FunctionBoundData,
    mode: CalcMode,
    who: &'static str,
) -> Result<f64> {
    match mode {
        CalcMode::Simplex => {
            let l = fd.l_grad.ok_or(Error::MissingLipschitz(who))?;
            Ok((sets.k as f64).sqrt() / 2.0 * l * sets.norm_t_pinv)
        }
        CalcMode::Quadratic => {
            if let Some(e) = fd.e_grad_q {
                return Ok(e);
            }
            let l = fd.l_hess.ok_or(Error::MissingLipschitz(who))?;
            let qinv = sets.q_inverse_norm.ok_or(Error::NotPoised)?;
            Ok(6.0 * (1.0 + 2f64.sqrt()) * (sets.points as f64).sqrt() * l * qinv)
        }
    }
}

fn min_of(cands: impl IntoIterator<Item = Option<f64>>, what: &'static str) -> Result<f64> {
    cands
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
        .ok_or(Error::NoCandidate(what))
}

/// `M` with `|G_f G_g^T - grad f grad g^T| <= M * scale`, where `scale`
/// is the gradient error scale (`Delta_u` or `Delta_u^2`). Candidates:
/// `e_f e_g scale + e_g |grad f| + e_f |grad g|`,
/// `e_f |G_g| + e_g |grad f|` and `e_g |G_f| + e_f |grad g|`.
pub fn m_cross(
    e_f: f64,
    e_g: f64,
    scale: f64,
    grad_f: Option<f64>,
    grad_g: Option<f64>,
    approx_f: Option<f64>,
    approx_g: Option<f64>,
) -> Result<f64> {
    min_of(
        [
            grad_f.zip(grad_g).map(|(a, b)| e_f * e_g * scale + e_g * a + e_f * b),
            approx_g.zip(grad_f).map(|(ag, a)| e_f * ag + e_g * a),
            approx_f.zip(grad_g).map(|(af, b)| e_g * af + e_f * b),
        ],
        "cross-term",
    )
}

/// `M` with `|G_g G_g^T - grad g grad g^T| <= M * scale`. Candidates:
/// `e^2 scale + 2 e |grad g|` and `e |G_g| + e |grad g|`.
pub fn m_self(e_g: f64, scale: f64, grad_g: Option<f64>, approx_g: Option<f64>) -> Result<f64> {
    min_of(
        [
            grad_g.map(|b| e_g * e_g * scale + 2.0 * e_g * b),
            grad_g.zip(approx_g).map(|(b, ag)| e_g * ag + e_g * b),
        ],
        "self-term",
    )
}

/// Power-rule minimum `min{e scale + 2 |grad f|, |G_f| + |grad f|}`.
pub fn m_power(e_f: f64, scale: f64, grad_f: Option<f64>, approx_f: Option<f64>) -> Result<f64> {
    min_of(
        [
            grad_f.map(|a| e_f * scale + 2.0 * a),
            grad_f.zip(approx_f).map(|(a, af)| af + a),
        ],
        "power",
    )
}

/// A-priori bound on `|rule Hessian - true Hessian|` in the spectral norm.
pub fn calculus_error_bound(rule: Rule, mode: CalcMode, inputs: &CalcBoundInputs) -> Result<f64> {
    let sets = &inputs.sets;
    if sets.delta_s.min(sets.delta_t) <= 0.0 {
        return Err(Error::NonPositiveRadius("delta_l"));
    }
    let du = sets.delta_u();
    let scale = match mode {
        CalcMode::Simplex => du,
        CalcMode::Quadratic => du * du,
    };
    let f = &inputs.f;
    let eh_f = hessian_constant(sets, f, "f")?;
    let e_f = gradient_constant(sets, f, mode, "f")?;

    match rule {
        Rule::Power(p) => {
            if p < 2 {
                return Err(Error::InvalidPower(p));
            }
            let pf = p as f64;
            let e = p as i32;
            let fa = f.value.abs();
            let m = m_power(e_f, scale, f.grad_norm, f.approx_grad_norm)?;
            Ok(pf * eh_f * fa.powi(e - 1) * du + pf * (pf - 1.0) * e_f * fa.powi(e - 2) * m * scale)
        }
        Rule::Product | Rule::Quotient => {
            let g = inputs.g.as_ref().ok_or(Error::Config(
                "product and quotient bounds need data for g".into(),
            ))?;
            let eh_g = hessian_constant(sets, g, "g")?;
            let e_g = gradient_constant(sets, g, mode, "g")?;
            let cross = m_cross(
                e_f,
                e_g,
                scale,
                f.grad_norm,
                g.grad_norm,
                f.approx_grad_norm,
                g.approx_grad_norm,
            )?;
            let (fa, ga) = (f.value.abs(), g.value.abs());
            if rule == Rule::Product {
                return Ok((eh_f * ga + eh_g * fa) * du + 2.0 * cross * scale);
            }
            if ga < NumericSettings::DEFAULT.division_floor {
                return Err(Error::DivisionByZero(g.value));
            }
            let m = cross.max(m_self(e_g, scale, g.grad_norm, g.approx_grad_norm)?);
            Ok((eh_f * ga * ga * du + eh_g * fa * ga * du + 2.0 * m * (fa + ga) * scale)
                / (ga * ga * ga))
        }
    }
}
