//! Exact law of the transformed process on one regime interval: Gaussian
//! with mean `base + offset + ∫beta` and variance `base + offset + ∫alpha²`,
//! plus the standard normal distribution/quantile functions everything else
//! leans on.

use alloc::format;

use crate::error::{Error, Result};
use crate::expr::{Integrator, TimeFunction};
use crate::math;
use crate::quadrature::QuadratureConfig;
use crate::transform::Rho;

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_68;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * math::exp(-0.5 * x * x)
}

/// Standard normal distribution function via the complementary error
/// function; absolute error at the level of a few ulps.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * math::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile: rational initial estimate polished by Newton
/// steps on the distribution function.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::range(format!("quantile requires p in (0, 1), got {p}")));
    }
    if p > 0.5 {
        return std_normal_quantile(1.0 - p).map(|x| -x);
    }
    let mut x = quantile_estimate(p);
    // two corrections suffice for full double accuracy away from underflow
    for _ in 0..3 {
        let density = std_normal_pdf(x);
        if density < 1e-290 {
            break;
        }
        let step = (std_normal_cdf(x) - p) / density;
        x -= step;
        if math::abs(step) <= 1e-15 * math::abs(x).max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Rational approximation with relative error below 1.2e-9 (lower half only;
/// the caller reflects the upper half).
fn quantile_estimate(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = math::sqrt(-2.0 * math::ln(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Sign of the slope indicator `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeSign {
    pub sign: Sign,
    pub g: f64,
}

/// Gaussian law evaluator for one regime started at `t_start` from the law
/// `N(base_mean + offset_mean, base_var + offset_var)`.
///
/// The offset pair carries a restart: cumulative drift and variance already
/// accumulated by earlier regimes. Under the standing drift band the restart
/// automatically satisfies `|offset_mean| <= offset_var / 2`; the curve
/// records but does not enforce it, since the pathology constructions
/// deliberately leave that regime.
#[derive(Debug, Clone)]
pub struct LawCurve {
    base_mean: f64,
    base_var: f64,
    offset_mean: f64,
    offset_var: f64,
    t_start: f64,
    alpha: TimeFunction,
    beta: TimeFunction,
    beta_int: Integrator,
    alpha_sq_int: Integrator,
    rho: Rho,
    quad: QuadratureConfig,
}

impl LawCurve {
    pub fn new(
        base: (f64, f64),
        offset: (f64, f64),
        t_start: f64,
        alpha: TimeFunction,
        beta: TimeFunction,
        rho: Rho,
    ) -> Result<Self> {
        let (base_mean, base_var) = base;
        let (offset_mean, offset_var) = offset;
        if !(base_var > 0.0) {
            return Err(Error::invalid(format!("base variance must be positive, got {base_var}")));
        }
        if !(offset_var >= 0.0) {
            return Err(Error::invalid(format!("offset variance must be >= 0, got {offset_var}")));
        }
        let alpha = alpha.simplify();
        let beta = beta.simplify();
        let beta_int = beta.integrator();
        let alpha_sq_int = alpha.clone().squared().integrator();
        Ok(Self {
            base_mean,
            base_var,
            offset_mean,
            offset_var,
            t_start,
            alpha,
            beta,
            beta_int,
            alpha_sq_int,
            rho,
            quad: QuadratureConfig::DEFAULT,
        })
    }

    pub fn with_quadrature(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn rho(&self) -> &Rho {
        &self.rho
    }

    /// Whether the restart satisfies the mean/variance inequality the
    /// monotonicity argument needs.
    pub fn restart_within_bound(&self) -> bool {
        math::abs(self.offset_mean) <= 0.5 * self.offset_var
    }

    /// Cumulative `(∫beta, ∫alpha²)` from the regime start.
    pub fn cumulative(&self, t: f64) -> Result<(f64, f64)> {
        if t < self.t_start {
            return Err(Error::range(format!("t = {t} before regime start {}", self.t_start)));
        }
        let b = self.beta_int.integrate(self.t_start, t, &self.quad)?;
        let a = self.alpha_sq_int.integrate(self.t_start, t, &self.quad)?;
        Ok((b, a))
    }

    /// Mean and variance of the law at `t`.
    pub fn mean_var(&self, t: f64) -> Result<(f64, f64)> {
        let (b, a) = self.cumulative(t)?;
        Ok((
            self.base_mean + self.offset_mean + b,
            self.base_var + self.offset_var + a,
        ))
    }

    /// The standardized gap `(rho(t) - mean) / sqrt(var)` whose image under
    /// the normal distribution function is `phi`.
    pub fn f_value(&self, t: f64) -> Result<f64> {
        let (m, v) = self.mean_var(t)?;
        let rho = self.rho.eval(t);
        let f = (rho - m) / math::sqrt(v);
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::range(format!("f(t) not finite at t = {t} (rho = {rho}, m = {m}, v = {v})")))
        }
    }

    /// `phi(t) = P(Y_t <= rho(t))`, always inside `(0, 1)` up to floating
    /// point saturation in the far tails.
    pub fn phi(&self, t: f64) -> Result<f64> {
        Ok(std_normal_cdf(self.f_value(t)?))
    }

    /// The slope indicator
    /// `g = alpha² [∫beta + offset_mean + (base_mean - rho)] + 2 (rho' - beta) v`;
    /// `phi` is increasing exactly where `g` is positive.
    pub fn g_value(&self, t: f64) -> Result<f64> {
        let (b, a) = self.cumulative(t)?;
        let v = self.base_var + self.offset_var + a;
        let alpha = self.alpha.eval(t);
        let beta = self.beta.eval(t);
        let rho = self.rho.eval(t);
        let rho_d = self.rho.deriv(t);
        let g = alpha * alpha * (b + self.offset_mean + (self.base_mean - rho))
            + 2.0 * (rho_d - beta) * v;
        if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::range(format!("slope indicator not finite at t = {t}")))
        }
    }

    pub fn slope_sign(&self, t: f64) -> Result<SlopeSign> {
        let g = self.g_value(t)?;
        let sign = if g > 0.0 {
            Sign::Pos
        } else if g < 0.0 {
            Sign::Neg
        } else {
            Sign::Zero
        };
        Ok(SlopeSign { sign, g })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::Rho;

    fn tf(c: f64) -> TimeFunction {
        TimeFunction::constant(c)
    }

    #[test]
    fn cdf_pdf_quantile_basics() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!((std_normal_cdf(1.959963985) - 0.975).abs() < 1e-9);
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
    }

    #[test]
    fn quantile_round_trip_across_the_range() {
        let mut p = 1e-12;
        while p < 1.0 {
            let x = std_normal_quantile(p).unwrap();
            let back = std_normal_cdf(x);
            assert!((back - p).abs() <= 1e-12, "p = {p}: quantile {x}, cdf back {back}");
            p *= 1.9;
        }
        for p in [0.2, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999999] {
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) - p).abs() <= 1e-12);
        }
    }

    fn unit_curve(alpha: f64, beta: f64) -> LawCurve {
        LawCurve::new((0.0, 1.0), (0.0, 0.0), 0.0, tf(alpha), tf(beta), Rho::constant(0.0)).unwrap()
    }

    #[test]
    fn constant_regime_mean_var_by_hand() {
        let curve = unit_curve(libm::sqrt(2.0), -1.0);
        let (m, v) = curve.mean_var(0.0).unwrap();
        assert_eq!((m, v), (0.0, 1.0));
        let (m, v) = curve.mean_var(1.0).unwrap();
        assert!((m + 1.0).abs() < 1e-14);
        assert!((v - 3.0).abs() < 1e-12);
        assert!(curve.mean_var(-0.5).is_err());
    }

    #[test]
    fn phi_starts_at_half_and_climbs() {
        let curve = unit_curve(libm::sqrt(2.0), -1.0);
        assert_eq!(curve.phi(0.0).unwrap(), 0.5);
        // f(1) = 1/sqrt(3)
        let want = 0.718148569174613485; // Phi(1/sqrt(3))
        assert!((curve.phi(1.0).unwrap() - want).abs() < 1e-13);
        // far out the distribution saturates toward one
        assert!(curve.phi(1.0e4).unwrap() >= 1.0 - 1e-3);
    }

    #[test]
    fn slope_sign_tracks_the_band() {
        let up = unit_curve(libm::sqrt(2.0), -1.0);
        let down = unit_curve(1.0, 0.375);
        for i in 1..=50 {
            let t = 0.1 * i as f64;
            assert_eq!(up.slope_sign(t).unwrap().sign, Sign::Pos);
            assert_eq!(down.slope_sign(t).unwrap().sign, Sign::Neg);
        }
        let frozen = unit_curve(0.0, 0.0);
        assert_eq!(frozen.slope_sign(2.0).unwrap().sign, Sign::Zero);
    }

    #[test]
    fn finite_difference_sign_agrees_with_g() {
        for (a, b) in [(libm::sqrt(2.0), -1.0), (1.0, 0.375)] {
            let curve = unit_curve(a, b);
            for i in 1..=200 {
                let t = 0.02 * i as f64;
                let g = curve.g_value(t).unwrap();
                if g.abs() <= 1e-8 {
                    continue;
                }
                let h = 1e-6;
                let diff = curve.phi(t + h).unwrap() - curve.phi(t - h).unwrap();
                assert_eq!(diff > 0.0, g > 0.0, "t = {t}, g = {g}, diff = {diff}");
            }
        }
    }

    #[test]
    fn restart_offsets_shift_the_law() {
        let curve = LawCurve::new(
            (0.0, 1.0),
            (-0.25, 0.5),
            2.0,
            tf(1.0),
            tf(-0.375),
            Rho::constant(0.0),
        )
        .unwrap();
        assert!(curve.restart_within_bound());
        let (m, v) = curve.mean_var(2.0).unwrap();
        assert_eq!((m, v), (-0.25, 1.5));
        let (m, v) = curve.mean_var(4.0).unwrap();
        assert!((m - (-0.25 - 0.75)).abs() < 1e-14);
        assert!((v - 3.5).abs() < 1e-14);
    }

    #[test]
    fn piecewise_variance_sum_matches_hand_total() {
        // stitched regimes with alpha_n = sqrt(2n) on [n-1, n): after n unit
        // intervals the variance is 1 + 2 * sum_{k<=n} k = 1 + n(n+1)
        let mut offset = (0.0, 0.0);
        for n in 1..=20usize {
            let alpha = libm::sqrt(2.0 * n as f64);
            let curve = LawCurve::new(
                (0.0, 1.0),
                offset,
                (n - 1) as f64,
                tf(alpha),
                tf(-(n as f64)),
                Rho::constant(0.0),
            )
            .unwrap();
            let (b, a) = curve.cumulative(n as f64).unwrap();
            offset = (offset.0 + b, offset.1 + a);
        }
        let n = 20.0f64;
        assert!((offset.1 - n * (n + 1.0)).abs() < 1e-9, "{}", offset.1);
        assert!((offset.0 + n * (n + 1.0) / 2.0).abs() < 1e-9);
    }
}
