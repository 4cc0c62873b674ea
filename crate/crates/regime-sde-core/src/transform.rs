//! The state-space change of variables that makes the diffusion coefficient
//! deterministic, its inverse, and the image of the reference function.

use alloc::format;
use alloc::string::String;

use crate::coefficients::{CoefficientSet, Mode};
use crate::error::{Error, Result};
use crate::expr::TimeFunction;
use crate::math;

/// Lower endpoint of the open state domain `U_t` (`-inf` in additive mode).
pub fn domain_lower(coeffs: &CoefficientSet, t: f64) -> f64 {
    coeffs.domain_lower(t)
}

/// Forward map: `x/sigma2(t)` (additive) or `log(sigma1(t)x + sigma2(t)) /
/// sigma1(t)` (multiplicative). Strictly increasing in `x`, onto the reals.
pub fn forward(coeffs: &CoefficientSet, t: f64, x: f64) -> Result<f64> {
    coeffs.mode_check(t).map_err(|e| match e {
        Error::Mode { .. } => e,
        other => other,
    })?;
    match coeffs.mode() {
        Mode::Additive => Ok(x / coeffs.sigma2(t)),
        Mode::Multiplicative => {
            let s1 = coeffs.sigma1(t);
            let s2 = coeffs.sigma2(t);
            let s = s1 * x + s2;
            if s <= 0.0 {
                return Err(Error::Domain { t, x, lower: -s2 / s1 });
            }
            // log1p route where the product is a small correction to sigma2,
            // which keeps the value accurate down toward the boundary
            let v = if s2 > 0.0 && math::abs(s1 * x) < 0.5 * s2 {
                math::ln(s2) + math::log1p(s1 * x / s2)
            } else {
                math::ln(s)
            };
            Ok(v / s1)
        }
    }
}

/// Inverse map: `sigma2(t)·y` (additive) or `(exp(sigma1(t)y) - sigma2(t)) /
/// sigma1(t)`; every real `y` maps into `U_t`.
pub fn inverse(coeffs: &CoefficientSet, t: f64, y: f64) -> f64 {
    match coeffs.mode() {
        Mode::Additive => coeffs.sigma2(t) * y,
        Mode::Multiplicative => {
            let s1 = coeffs.sigma1(t);
            let s2 = coeffs.sigma2(t);
            if s2 == 1.0 {
                libm::expm1(s1 * y) / s1
            } else {
                (math::exp(s1 * y) - s2) / s1
            }
        }
    }
}

/// Image of the reference function under the forward map, with its chain-rule
/// derivative. Also the container for a directly supplied transformed
/// reference when a problem is posed in the transformed coordinates.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Rho {
    Direct {
        value: TimeFunction,
        deriv: TimeFunction,
    },
    Transformed {
        coeffs: CoefficientSet,
        r: TimeFunction,
        r_deriv: TimeFunction,
    },
}

impl Rho {
    pub fn constant(c: f64) -> Self {
        Rho::Direct { value: TimeFunction::constant(c), deriv: TimeFunction::constant(0.0) }
    }

    pub fn from_time_function(value: TimeFunction) -> Self {
        let deriv = value.deriv().simplify();
        Rho::Direct { value: value.simplify(), deriv }
    }

    pub fn transformed(coeffs: CoefficientSet, r: TimeFunction) -> Self {
        let r_deriv = r.deriv().simplify();
        Rho::Transformed { coeffs, r: r.simplify(), r_deriv }
    }

    /// `rho(t)`; `NaN` when the reference leaves the state domain.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Rho::Direct { value, .. } => value.eval(t),
            Rho::Transformed { coeffs, r, .. } => {
                forward(coeffs, t, r.eval(t)).unwrap_or(f64::NAN)
            }
        }
    }

    /// `rho'(t)` by the chain rule through the forward map.
    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            Rho::Direct { deriv, .. } => deriv.eval(t),
            Rho::Transformed { coeffs, r, r_deriv } => {
                let rv = r.eval(t);
                let rd = r_deriv.eval(t);
                match coeffs.mode() {
                    Mode::Additive => {
                        let s2 = coeffs.sigma2(t);
                        rd / s2 - rv * coeffs.sigma2_deriv(t) / (s2 * s2)
                    }
                    Mode::Multiplicative => {
                        let s1 = coeffs.sigma1(t);
                        let s = s1 * rv + coeffs.sigma2(t);
                        if s <= 0.0 {
                            return f64::NAN;
                        }
                        let numer = coeffs.sigma1_deriv(t) * rv + coeffs.sigma2_deriv(t) + s1 * rd;
                        numer / (s * s1) - coeffs.sigma1_deriv(t) * math::ln(s) / (s1 * s1)
                    }
                }
            }
        }
    }
}

/// Grid report attached to a transformed reference: domain membership,
/// monotonicity of the image, and the upper bound against the initial mean.
#[derive(Debug, Clone)]
pub struct RhoReport {
    pub window: (f64, f64),
    pub grid_points: usize,
    /// First grid time where `rho' < 0`, if any.
    pub decreasing_at: Option<f64>,
    pub sup_rho: f64,
    /// `Some(margin)` when an initial mean was supplied; negative margin
    /// flags a violation of `sup rho <= mean`.
    pub sup_bound_margin: Option<f64>,
}

impl RhoReport {
    pub fn non_decreasing(&self) -> bool {
        self.decreasing_at.is_none()
    }

    pub fn sup_bound_ok(&self) -> bool {
        self.sup_bound_margin.map(|m| m >= 0.0).unwrap_or(true)
    }

    pub fn summary(&self) -> String {
        format!(
            "rho on [{}, {}]: sup = {:.6e}, non-decreasing: {}, bound margin: {:?}",
            self.window.0,
            self.window.1,
            self.sup_rho,
            self.non_decreasing(),
            self.sup_bound_margin
        )
    }
}

/// Builds `rho = F(t, r(t))` and validates it on a grid. Fails with the first
/// offending time when the reference leaves `U_t`; monotonicity and the
/// mean bound are reported, not fatal.
pub fn transform_reference(
    coeffs: &CoefficientSet,
    r: &TimeFunction,
    window: (f64, f64),
    grid_points: usize,
    initial_mean: Option<f64>,
) -> Result<(Rho, RhoReport)> {
    let n = grid_points.max(2);
    let rho = Rho::transformed(coeffs.clone(), r.clone());
    let mut sup_rho = f64::NEG_INFINITY;
    let mut decreasing_at = None;
    let slope_tol = 1e-12;
    for i in 0..n {
        let t = window.0 + (window.1 - window.0) * i as f64 / (n - 1) as f64;
        let rv = r.eval(t);
        if !rv.is_finite() || rv <= coeffs.domain_lower(t) {
            return Err(Error::Domain { t, x: rv, lower: coeffs.domain_lower(t) });
        }
        let v = rho.eval(t);
        if !v.is_finite() {
            return Err(Error::Domain { t, x: rv, lower: coeffs.domain_lower(t) });
        }
        sup_rho = sup_rho.max(v);
        if decreasing_at.is_none() {
            let d = rho.deriv(t);
            if d < -slope_tol * d.abs().max(1.0) {
                decreasing_at = Some(t);
            }
        }
    }
    let sup_bound_margin = initial_mean.map(|m| m - sup_rho);
    Ok((
        rho,
        RhoReport { window, grid_points: n, decreasing_at, sup_rho, sup_bound_margin },
    ))
}
