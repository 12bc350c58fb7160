//! A-priori error bounds for simplex gradients and nested-set Hessians.
//!
//! Lipschitz constants are always supplied by the caller. Norm factors refer
//! to the radius-normalized sets `S / Delta_S` and `T / Delta_T`.

use nalgebra::DVector;
use serde::Serialize;

use crate::linalg;
use crate::quadmodel::scaled_inverse_norm;
use crate::sets::{nshc_points, quadratic_basis_size, DirectionSet};
use crate::{Error, Result};

/// Data shared by the gradient and Hessian bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    /// Number of columns of `S`.
    pub m: usize,
    /// Number of columns of `T`.
    pub k: usize,
    pub l_grad: f64,
    pub l_hess: f64,
    pub delta_s: f64,
    pub delta_t: f64,
    /// `|(S_hat^T)^+|`
    pub norm_s_pinv: f64,
    /// `|T_hat^+|`, which equals `|(T_hat^T)^+|` in both supported norms.
    pub norm_t_pinv: f64,
}

/// Which matrix norm to use for the pseudoinverse factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum NormKind {
    #[default]
    Spectral,
    /// Upper bound on the spectral norm.
    Frobenius,
}

impl NormKind {
    pub fn apply(self, a: &nalgebra::DMatrix<f64>) -> f64 {
        match self {
            NormKind::Spectral => linalg::spectral_norm(a),
            NormKind::Frobenius => linalg::frobenius_norm(a),
        }
    }
}

impl BoundInputs {
    /// Fills `m`, `k`, radii and norm factors from the sets themselves.
    pub fn from_sets(
        s: &DirectionSet,
        t: &DirectionSet,
        l_grad: f64,
        l_hess: f64,
        kind: NormKind,
    ) -> Result<Self> {
        let (norm_s_pinv, norm_t_pinv) = scaled_pinv_norms(s, t, kind)?;
        Ok(Self {
            m: s.len(),
            k: t.len(),
            l_grad,
            l_hess,
            delta_s: s.radius(),
            delta_t: t.radius(),
            norm_s_pinv,
            norm_t_pinv,
        })
    }

    pub fn delta_u(&self) -> f64 {
        self.delta_s.max(self.delta_t)
    }

    pub fn delta_l(&self) -> f64 {
        self.delta_s.min(self.delta_t)
    }

    fn validate(&self) -> Result<()> {
        let scalars = [
            ("l_grad", self.l_grad),
            ("l_hess", self.l_hess),
            ("delta_s", self.delta_s),
            ("delta_t", self.delta_t),
            ("norm_s_pinv", self.norm_s_pinv),
            ("norm_t_pinv", self.norm_t_pinv),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
            if v < 0.0 {
                return Err(Error::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

/// `(|(S_hat^T)^+|, |T_hat^+|)` for the normalized sets.
pub fn scaled_pinv_norms(s: &DirectionSet, t: &DirectionSet, kind: NormKind) -> Result<(f64, f64)> {
    let s_hat = s.normalized()?;
    let t_hat = t.normalized()?;
    let ps = linalg::pseudoinverse(&s_hat.transpose())?;
    let pt = linalg::pseudoinverse(&t_hat)?;
    Ok((kind.apply(&ps), kind.apply(&pt)))
}

/// `(sqrt(k) / 2) L_grad |(T_hat^T)^+| Delta_T`.
pub fn error_bound_gsg(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    Ok((inputs.k as f64).sqrt() / 2.0 * inputs.l_grad * inputs.norm_t_pinv * inputs.delta_t)
}

/// Constant `E` with `|H_s - H| <= E * Delta_u`.
pub fn nsh_constant(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let dl = inputs.delta_l();
    if dl <= 0.0 {
        return Err(Error::NonPositiveRadius("delta_l"));
    }
    let du = inputs.delta_u();
    let ratio = if du == dl { 5.0 } else { 2.0 * du / dl + 3.0 };
    Ok(inputs.m as f64 * (inputs.k as f64).sqrt() / 3.0
        * inputs.l_hess
        * ratio
        * inputs.norm_s_pinv
        * inputs.norm_t_pinv)
}

/// `(m sqrt(k) / 3) L_hess (2 Delta_u / Delta_l + 3) |(S_hat^T)^+| |T_hat^+| Delta_u`.
pub fn error_bound_nsh(inputs: &BoundInputs) -> Result<f64> {
    Ok(nsh_constant(inputs)? * inputs.delta_u())
}

/// Bound for the canonical sets of size `beta`: `(5/3) n^{3/2} L beta` when
/// `k = 0` and `(11/2) n^2 L beta` otherwise.
pub fn error_bound_canonical(n: usize, k: usize, beta: f64, l_hess: f64) -> Result<f64> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::NonPositiveRadius("beta"));
    }
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if k > n {
        return Err(Error::IndexOutOfRange { index: k, max: n });
    }
    if !l_hess.is_finite() || l_hess < 0.0 {
        return Err(Error::Config(format!("l_hess must be finite and nonnegative, got {l_hess}")));
    }
    let nf = n as f64;
    Ok(if k == 0 {
        5.0 / 3.0 * nf.powf(1.5) * l_hess * beta
    } else {
        5.5 * nf * nf * l_hess * beta
    })
}

/// Set-dependent factors used by the calculus-rule bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetFactors {
    pub m: usize,
    pub k: usize,
    pub delta_s: f64,
    pub delta_t: f64,
    pub norm_s_pinv: f64,
    pub norm_t_pinv: f64,
    /// `|Q_hat^{-1}|` over the evaluation points, when they are poised.
    pub q_inverse_norm: Option<f64>,
    /// Number of interpolation points.
    pub points: usize,
}

impl SetFactors {
    pub fn from_sets(
        x0: &DVector<f64>,
        s: &DirectionSet,
        t: &DirectionSet,
        kind: NormKind,
    ) -> Result<Self> {
        let (norm_s_pinv, norm_t_pinv) = scaled_pinv_norms(s, t, kind)?;
        let pts = nshc_points(x0, s, t)?;
        let q_inverse_norm = if pts.len() == quadratic_basis_size(s.dim()) {
            scaled_inverse_norm(&pts, x0).ok()
        } else {
            None
        };
        Ok(Self {
            m: s.len(),
            k: t.len(),
            delta_s: s.radius(),
            delta_t: t.radius(),
            norm_s_pinv,
            norm_t_pinv,
            q_inverse_norm,
            points: pts.len(),
        })
    }

    pub fn delta_u(&self) -> f64 {
        self.delta_s.max(self.delta_t)
    }

    pub fn bound_inputs(&self, l_grad: f64, l_hess: f64) -> BoundInputs {
        BoundInputs {
            m: self.m,
            k: self.k,
            l_grad,
            l_hess,
            delta_s: self.delta_s,
            delta_t: self.delta_t,
            norm_s_pinv: self.norm_s_pinv,
            norm_t_pinv: self.norm_t_pinv,
        }
    }
}
