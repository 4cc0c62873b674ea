//! Adaptive Simpson quadrature for integrands without a closed-form
//! primitive. Tolerances sit far below the root-finder tolerance so that
//! integral error never shows up in crossing times.

use alloc::format;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Absolute tolerance of the refinement test.
    pub abs_tol: f64,
    /// Maximum bisection depth before giving up.
    pub max_depth: u32,
}

impl QuadratureConfig {
    pub const DEFAULT: Self = Self { abs_tol: 1e-10, max_depth: 48 };
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self::DEFAULT
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if math::abs(delta) <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature {
            a,
            b,
            detail: format!("refinement depth exhausted, residual {delta:e}"),
        });
    }
    let half = 0.5 * tol;
    Ok(refine(f, a, fa, m, fm, lm, flm, left, half, depth - 1)?
        + refine(f, m, fm, b, fb, rm, frm, right, half, depth - 1)?)
}

/// Integrates `f` over `[a, b]` (either orientation) to the configured
/// absolute tolerance.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, cfg).map(|v| -v);
    }
    let fa = f(a);
    let fb = f(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Quadrature {
            a,
            b,
            detail: format!("integrand not finite at an endpoint ({fa}, {fb})"),
        });
    }
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    refine(&f, a, fa, b, fb, m, fm, whole, cfg.abs_tol, cfg.max_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_close_to_exact() {
        let got = integrate(|x| x * x, 0.0, 1.0, &QuadratureConfig::DEFAULT).unwrap();
        assert!((got - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn oscillation_free_exponential() {
        let got = integrate(|x| (-2.0 * x).exp(), 0.0, 3.0, &QuadratureConfig::DEFAULT).unwrap();
        let want = (1.0 - (-6.0f64).exp()) / 2.0;
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn reversed_interval_negates() {
        let fwd = integrate(|x| x, 0.0, 2.0, &QuadratureConfig::DEFAULT).unwrap();
        let rev = integrate(|x| x, 2.0, 0.0, &QuadratureConfig::DEFAULT).unwrap();
        assert_eq!(fwd, -rev);
    }

    #[test]
    fn depth_limit_reports_error() {
        let cfg = QuadratureConfig { abs_tol: 1e-300, max_depth: 2 };
        let err = integrate(|x| 1.0 / (1e-3 + x * x), -1.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
