//! Coefficient data for diffusions of the form `sigma(t, x) = sigma1(t)·x +
//! sigma2(t)` together with the drift this family forces, the transformed
//! regime drifts `beta_n`, and the drift/volatility band classifier.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::TimeFunction;
use crate::math;

/// Which branch of the affine diffusion is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Mode {
    /// `sigma1 == 0`, `sigma2 > 0`; the state space is all of `R`.
    Additive,
    /// `sigma1 > 0`; the state space is `(-sigma2/sigma1, inf)`.
    Multiplicative,
}

/// Per-regime volatility factors, either an explicit list (`alpha_1, ...,
/// alpha_k`) or one expression in the free index symbol `n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AlphaFamily {
    List(Vec<TimeFunction>),
    Parametric(TimeFunction),
}

impl AlphaFamily {
    /// Number of defined regimes, `None` when unbounded.
    pub fn count(&self) -> Option<usize> {
        match self {
            AlphaFamily::List(v) => Some(v.len()),
            AlphaFamily::Parametric(_) => None,
        }
    }
}

/// The full coefficient data of one problem: diffusion parts, the drift
/// parameter (`k` additive, `l` multiplicative) and the volatility family.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoefficientSet {
    mode: Mode,
    sigma1: TimeFunction,
    sigma2: TimeFunction,
    sigma1_deriv: TimeFunction,
    sigma2_deriv: TimeFunction,
    drift_param: TimeFunction,
    alpha_family: AlphaFamily,
}

impl CoefficientSet {
    /// Additive-noise problem: `sigma(t, x) = sigma2(t)` with drift
    /// `(sigma2'/sigma2)·x + k(t)`.
    pub fn additive(sigma2: TimeFunction, k: TimeFunction, alpha_family: AlphaFamily) -> Self {
        Self::build(Mode::Additive, TimeFunction::constant(0.0), sigma2, k, alpha_family)
    }

    /// Multiplicative problem: `sigma(t, x) = sigma1(t)·x + sigma2(t)` with
    /// the log-form drift plus `l(t)·sigma(t, x)`.
    pub fn multiplicative(
        sigma1: TimeFunction,
        sigma2: TimeFunction,
        ell: TimeFunction,
        alpha_family: AlphaFamily,
    ) -> Self {
        Self::build(Mode::Multiplicative, sigma1, sigma2, ell, alpha_family)
    }

    fn build(
        mode: Mode,
        sigma1: TimeFunction,
        sigma2: TimeFunction,
        drift_param: TimeFunction,
        alpha_family: AlphaFamily,
    ) -> Self {
        let sigma1 = sigma1.simplify();
        let sigma2 = sigma2.simplify();
        let sigma1_deriv = sigma1.deriv().simplify();
        let sigma2_deriv = sigma2.deriv().simplify();
        Self {
            mode,
            sigma1,
            sigma2,
            sigma1_deriv,
            sigma2_deriv,
            drift_param: drift_param.simplify(),
            alpha_family,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn sigma1_fn(&self) -> &TimeFunction {
        &self.sigma1
    }

    pub fn sigma2_fn(&self) -> &TimeFunction {
        &self.sigma2
    }

    pub fn drift_param_fn(&self) -> &TimeFunction {
        &self.drift_param
    }

    pub fn alpha_family(&self) -> &AlphaFamily {
        &self.alpha_family
    }

    pub fn sigma1(&self, t: f64) -> f64 {
        self.sigma1.eval(t)
    }

    pub fn sigma2(&self, t: f64) -> f64 {
        self.sigma2.eval(t)
    }

    pub fn sigma1_deriv(&self, t: f64) -> f64 {
        self.sigma1_deriv.eval(t)
    }

    pub fn sigma2_deriv(&self, t: f64) -> f64 {
        self.sigma2_deriv.eval(t)
    }

    /// `sigma(t, x) = sigma1(t)·x + sigma2(t)`.
    pub fn sigma(&self, t: f64, x: f64) -> f64 {
        self.sigma1(t) * x + self.sigma2(t)
    }

    /// Lower end of `U_t`; `-inf` in additive mode.
    pub fn domain_lower(&self, t: f64) -> f64 {
        match self.mode {
            Mode::Additive => f64::NEG_INFINITY,
            Mode::Multiplicative => -self.sigma2(t) / self.sigma1(t),
        }
    }

    /// Checks the mode's pointwise positivity invariants at `t`.
    pub fn mode_check(&self, t: f64) -> Result<()> {
        let s1 = self.sigma1(t);
        let s2 = self.sigma2(t);
        if !s1.is_finite() || !s2.is_finite() {
            return Err(Error::Mode { t, detail: format!("sigma not finite: sigma1 = {s1}, sigma2 = {s2}") });
        }
        match self.mode {
            Mode::Additive => {
                if s1 != 0.0 {
                    return Err(Error::Mode { t, detail: format!("additive mode requires sigma1 == 0, got {s1}") });
                }
                if s2 <= 0.0 {
                    return Err(Error::Mode { t, detail: format!("additive mode requires sigma2 > 0, got {s2}") });
                }
            }
            Mode::Multiplicative => {
                if s1 <= 0.0 {
                    return Err(Error::Mode { t, detail: format!("multiplicative mode requires sigma1 > 0, got {s1}") });
                }
                if s2 < 0.0 {
                    return Err(Error::Mode { t, detail: format!("sigma2 must be non-negative, got {s2}") });
                }
            }
        }
        Ok(())
    }

    /// Volatility factor of regime `n >= 1`, with the index bound.
    pub fn alpha(&self, n: usize) -> Result<TimeFunction> {
        if n == 0 {
            return Err(Error::range("regime indices start at 1"));
        }
        match &self.alpha_family {
            AlphaFamily::List(list) => list
                .get(n - 1)
                .cloned()
                .ok_or(Error::RegimeExhausted { index: n, available: list.len() }),
            AlphaFamily::Parametric(expr) => Ok(expr.bind_index(n)),
        }
    }

    /// The drift the diffusion family mandates.
    pub fn eval_b(&self, t: f64, x: f64) -> Result<f64> {
        self.mode_check(t)?;
        match self.mode {
            Mode::Additive => {
                let s2 = self.sigma2(t);
                Ok(self.sigma2_deriv(t) / s2 * x + self.drift_param.eval(t))
            }
            Mode::Multiplicative => {
                let s1 = self.sigma1(t);
                let s2 = self.sigma2(t);
                let s = s1 * x + s2;
                if s <= 0.0 {
                    return Err(Error::Domain { t, x, lower: -s2 / s1 });
                }
                let s1d = self.sigma1_deriv(t);
                let s2d = self.sigma2_deriv(t);
                Ok((s1d * s * math::ln(s) - s1 * s2d + s1d * s2) / (s1 * s1)
                    + self.drift_param.eval(t) * s)
            }
        }
    }

    /// Transformed drift of regime `n` at time `t`.
    pub fn beta(&self, n: usize, t: f64) -> Result<f64> {
        self.mode_check(t)?;
        match self.mode {
            Mode::Additive => {
                let s2 = self.sigma2(t);
                let b1 = self.eval_b(t, 1.0)?;
                Ok(b1 / s2 - self.sigma2_deriv(t) / (s2 * s2))
            }
            Mode::Multiplicative => {
                let s1 = self.sigma1(t);
                let s2 = self.sigma2(t);
                let s1d = self.sigma1_deriv(t);
                let s2d = self.sigma2_deriv(t);
                let b1 = self.eval_b(t, 1.0)?;
                let a = self.alpha(n)?.eval(t);
                Ok(b1 / (s1 + s2) - 0.5 * a * a * s1
                    + ((s1d + s2d) / (s1 + s2) - s1d / s1 * math::ln(s1 + s2)) / s1)
            }
        }
    }

    /// `b(t, 1)` as an expression tree.
    fn drift_at_one_fn(&self) -> TimeFunction {
        match self.mode {
            Mode::Additive => self
                .sigma2_deriv
                .clone()
                .div(self.sigma2.clone())
                .add(self.drift_param.clone()),
            Mode::Multiplicative => {
                let s = self.sigma1.clone().add(self.sigma2.clone());
                let log_term = self
                    .sigma1_deriv
                    .clone()
                    .mul(s.clone())
                    .mul(s.clone().log());
                log_term
                    .sub(self.sigma1.clone().mul(self.sigma2_deriv.clone()))
                    .add(self.sigma1_deriv.clone().mul(self.sigma2.clone()))
                    .div(self.sigma1.clone().squared())
                    .add(self.drift_param.clone().mul(s))
            }
        }
    }

    /// `beta_n` as an expression tree, for exact integration wherever the
    /// components are constant or otherwise closed under the primitive rules.
    pub fn beta_fn(&self, n: usize) -> Result<TimeFunction> {
        let b1 = self.drift_at_one_fn();
        let tree = match self.mode {
            Mode::Additive => b1
                .div(self.sigma2.clone())
                .sub(self.sigma2_deriv.clone().div(self.sigma2.clone().squared())),
            Mode::Multiplicative => {
                let s = self.sigma1.clone().add(self.sigma2.clone());
                let alpha_sq = self.alpha(n)?.squared();
                let correction = self
                    .sigma1_deriv
                    .clone()
                    .add(self.sigma2_deriv.clone())
                    .div(s.clone())
                    .sub(
                        self.sigma1_deriv
                            .clone()
                            .div(self.sigma1.clone())
                            .mul(s.clone().log()),
                    )
                    .div(self.sigma1.clone());
                b1.div(s)
                    .sub(alpha_sq.mul(self.sigma1.clone()).scale(0.5))
                    .add(correction)
            }
        };
        Ok(tree.simplify())
    }

    /// Verifies that the built-in drift satisfies its defining first-order
    /// ODE on a grid, with the space derivative taken by central difference.
    /// An override drift turns this into a violation detector.
    pub fn check_drift_ode(
        &self,
        grid: &TimeSpaceGrid,
        drift: Option<&dyn Fn(f64, f64) -> f64>,
    ) -> DriftOdeReport {
        let eval = |t: f64, x: f64| -> f64 {
            match drift {
                Some(f) => f(t, x),
                None => self.eval_b(t, x).unwrap_or(f64::NAN),
            }
        };
        let mut max_residual: f64 = 0.0;
        let mut worst = (grid.t0, grid.x0);
        let mut points = 0usize;
        for (t, x) in grid.iter() {
            let lower = self.domain_lower(t);
            if x <= lower {
                continue;
            }
            let mut h = 1e-6 * math::abs(x).max(1.0);
            if lower.is_finite() && x - h <= lower {
                h = 0.5 * (x - lower);
            }
            let dbdx = (eval(t, x + h) - eval(t, x - h)) / (2.0 * h);
            let s1 = self.sigma1(t);
            let residual = math::abs(
                s1 * eval(t, x)
                    - (dbdx * (s1 * x + self.sigma2(t)) - self.sigma1_deriv(t) * x - self.sigma2_deriv(t)),
            );
            points += 1;
            if residual.is_nan() || residual > max_residual {
                max_residual = if residual.is_nan() { f64::NAN } else { residual };
                worst = (t, x);
                if max_residual.is_nan() {
                    break;
                }
            }
        }
        DriftOdeReport { max_residual, worst, points }
    }
}

/// Rectangular evaluation grid for the drift ODE check.
#[derive(Debug, Clone, Copy)]
pub struct TimeSpaceGrid {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub x1: f64,
    pub nt: usize,
    pub nx: usize,
}

impl TimeSpaceGrid {
    pub fn new(t0: f64, t1: f64, x0: f64, x1: f64, nt: usize, nx: usize) -> Self {
        Self { t0, t1, x0, x1, nt: nt.max(2), nx: nx.max(2) }
    }

    fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (nt, nx) = (self.nt, self.nx);
        (0..nt).flat_map(move |i| {
            let t = self.t0 + (self.t1 - self.t0) * i as f64 / (nt - 1) as f64;
            (0..nx).map(move |j| (t, self.x0 + (self.x1 - self.x0) * j as f64 / (nx - 1) as f64))
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DriftOdeReport {
    pub max_residual: f64,
    pub worst: (f64, f64),
    pub points: usize,
}

/// Drift/volatility band of one regime over an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Band {
    /// `-alpha^2/2 <= beta <= -alpha^2/4`: the distribution function rises.
    Up,
    /// Up with one inequality holding with uniform slack.
    UpStrict,
    /// `alpha^2/4 <= beta <= alpha^2/2`: the distribution function falls.
    Down,
    /// Down with one inequality holding with uniform slack.
    DownStrict,
    /// `alpha == 0` and `beta == 0`: the law does not move.
    Frozen,
    Unclassified,
}

/// Band label plus the margin that produced it: for a satisfied band the
/// uniform slack of the better side, for `Unclassified` the (negative) worst
/// violation of the nearer band.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BandClass {
    pub band: Band,
    pub margin: f64,
}

impl BandClass {
    pub fn is_up(&self) -> bool {
        matches!(self.band, Band::Up | Band::UpStrict)
    }

    pub fn is_down(&self) -> bool {
        matches!(self.band, Band::Down | Band::DownStrict)
    }
}

impl core::fmt::Display for Band {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            Band::Up => "Up",
            Band::UpStrict => "UpStrict",
            Band::Down => "Down",
            Band::DownStrict => "DownStrict",
            Band::Frozen => "Frozen",
            Band::Unclassified => "Unclassified",
        };
        f.write_str(s)
    }
}

pub const DEFAULT_STRICT_MARGIN: f64 = 1e-9;

/// Classifies one `(alpha, beta)` pair against the drift bands on
/// `[t0, t1]`, sampled at `grid_size` points.
pub fn classify_band_fns(
    alpha: &TimeFunction,
    beta: &TimeFunction,
    t0: f64,
    t1: f64,
    grid_size: usize,
    strict_margin: f64,
) -> BandClass {
    let n = grid_size.max(2);
    let mut sup_alpha_sq: f64 = 0.0;
    let mut frozen = true;
    // slacks of the four inequalities, all >= 0 when the band holds
    let mut up_lo = f64::INFINITY; // beta + alpha^2/2
    let mut up_hi = f64::INFINITY; // -alpha^2/4 - beta
    let mut dn_lo = f64::INFINITY; // beta - alpha^2/4
    let mut dn_hi = f64::INFINITY; // alpha^2/2 - beta
    for i in 0..n {
        let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
        let a = alpha.eval(t);
        let b = beta.eval(t);
        if !a.is_finite() || !b.is_finite() {
            return BandClass { band: Band::Unclassified, margin: f64::NAN };
        }
        let a2 = a * a;
        sup_alpha_sq = sup_alpha_sq.max(a2);
        frozen &= a == 0.0 && b == 0.0;
        up_lo = up_lo.min(b + 0.5 * a2);
        up_hi = up_hi.min(-0.25 * a2 - b);
        dn_lo = dn_lo.min(b - 0.25 * a2);
        dn_hi = dn_hi.min(0.5 * a2 - b);
    }
    if frozen {
        return BandClass { band: Band::Frozen, margin: 0.0 };
    }
    let member_tol = 1e-12 * sup_alpha_sq.max(1.0);
    let strict_floor = strict_margin * sup_alpha_sq;
    let classify = |lo: f64, hi: f64, plain: Band, strict: Band| -> Option<BandClass> {
        if lo >= -member_tol && hi >= -member_tol {
            let slack = lo.max(hi);
            let band = if slack >= strict_floor && sup_alpha_sq > 0.0 { strict } else { plain };
            Some(BandClass { band, margin: slack })
        } else {
            None
        }
    };
    classify(up_lo, up_hi, Band::Up, Band::UpStrict)
        .or_else(|| classify(dn_lo, dn_hi, Band::Down, Band::DownStrict))
        .unwrap_or_else(|| {
            let up_viol = up_lo.min(up_hi);
            let dn_viol = dn_lo.min(dn_hi);
            BandClass { band: Band::Unclassified, margin: up_viol.max(dn_viol) }
        })
}

impl CoefficientSet {
    /// Band of regime `n` on `[t0, t1]`.
    pub fn classify_band(
        &self,
        n: usize,
        t0: f64,
        t1: f64,
        grid_size: usize,
        strict_margin: f64,
    ) -> Result<BandClass> {
        let alpha = self.alpha(n)?;
        let beta = self.beta_fn(n)?;
        Ok(classify_band_fns(&alpha, &beta, t0, t1, grid_size, strict_margin))
    }
}

/// Convenience used by demos and tests: a parametric family that ignores the
/// index, i.e. the same factor for every regime.
pub fn uniform_alpha(alpha: TimeFunction) -> AlphaFamily {
    AlphaFamily::Parametric(alpha)
}

/// `alpha_n = sqrt(2n)` as a parametric family.
pub fn sqrt_2n_alpha() -> AlphaFamily {
    AlphaFamily::Parametric(TimeFunction::index().scale(2.0).pow(0.5))
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Mode::Additive => "additive",
            Mode::Multiplicative => "multiplicative",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(c: f64) -> TimeFunction {
        TimeFunction::constant(c)
    }

    #[test]
    fn drift_linear_case_reduces_to_ell_x() {
        // sigma1 = 1, sigma2 = 0, ell = b: drift must be b*x
        let coeffs = CoefficientSet::multiplicative(tf(1.0), tf(0.0), tf(0.7), uniform_alpha(tf(1.0)));
        for x in [0.25, 1.0, 4.0] {
            let b = coeffs.eval_b(0.3, x).unwrap();
            assert!((b - 0.7 * x).abs() < 1e-14, "{b}");
        }
    }

    #[test]
    fn drift_additive_zero_case() {
        let coeffs = CoefficientSet::additive(tf(1.0), tf(0.0), uniform_alpha(tf(1.0)));
        assert_eq!(coeffs.eval_b(1.0, -3.0).unwrap(), 0.0);
    }

    #[test]
    fn drift_log_case_matches_hand_formula() {
        // sigma1 = e^t, sigma2 = 0, ell = 0: b(t, x) = x (t + log x)
        let c = TimeFunction::exp_linear(1.0, 0.0);
        let coeffs = CoefficientSet::multiplicative(c, tf(0.0), tf(0.0), uniform_alpha(tf(1.0)));
        for (t, x) in [(0.0, 2.0), (0.5, 0.3), (1.2, 5.0)] {
            let b = coeffs.eval_b(t, x).unwrap();
            let want = x * (t + libm::log(x));
            assert!((b - want).abs() <= 1e-12 * want.abs().max(1.0), "b({t},{x}) = {b} vs {want}");
        }
    }

    #[test]
    fn drift_outside_domain_is_an_error() {
        let coeffs = CoefficientSet::multiplicative(tf(1.0), tf(0.0), tf(0.0), uniform_alpha(tf(1.0)));
        assert!(matches!(coeffs.eval_b(0.0, -1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn beta_explosion_family_is_minus_n() {
        let coeffs = CoefficientSet::multiplicative(tf(1.0), tf(0.0), tf(0.0), sqrt_2n_alpha());
        for n in 1..=50 {
            let b = coeffs.beta(n, 0.7).unwrap();
            assert!((b + n as f64).abs() < 1e-12, "beta_{n} = {b}");
            let tree = coeffs.beta_fn(n).unwrap();
            assert!((tree.eval(0.7) + n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_additive_pure_scaling_vanishes() {
        // sigma2 = c, k = c'/c·0 ... with drift a == 0 means k == 0 here and
        // b(t,x) = (c'/c) x, so beta must vanish identically.
        let c = TimeFunction::exp_linear(-1.0, 0.0);
        let coeffs = CoefficientSet::additive(c, tf(0.0), uniform_alpha(tf(1.0)));
        for t in [0.0, 0.5, 2.0] {
            assert!(coeffs.beta(1, t).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn beta_linear_case_is_b_minus_half_alpha_sq() {
        let coeffs = CoefficientSet::multiplicative(
            tf(1.0),
            tf(0.0),
            tf(0.9),
            AlphaFamily::List(alloc::vec![tf(2.0), tf(1.0)]),
        );
        assert!((coeffs.beta(1, 0.0).unwrap() - (0.9 - 2.0)).abs() < 1e-14);
        assert!((coeffs.beta(2, 0.0).unwrap() - (0.9 - 0.5)).abs() < 1e-14);
        assert!(matches!(coeffs.alpha(3), Err(Error::RegimeExhausted { index: 3, available: 2 })));
    }

    #[test]
    fn drift_ode_residual_zero_for_trivial_additive() {
        let coeffs = CoefficientSet::additive(tf(1.0), tf(0.0), uniform_alpha(tf(1.0)));
        let grid = TimeSpaceGrid::new(0.0, 2.0, -5.0, 5.0, 16, 16);
        let report = coeffs.check_drift_ode(&grid, None);
        assert!(report.max_residual == 0.0, "{report:?}");
    }

    #[test]
    fn drift_ode_detects_perturbation() {
        let c = TimeFunction::exp_linear(-1.0, 0.0);
        let coeffs = CoefficientSet::multiplicative(c, tf(0.0), tf(0.0), uniform_alpha(tf(1.0)));
        let grid = TimeSpaceGrid::new(0.0, 2.0, 0.1, 10.0, 16, 16);
        let clean = coeffs.check_drift_ode(&grid, None);
        assert!(clean.max_residual <= 1e-6, "{clean:?}");
        let inner = coeffs.clone();
        let perturbed = move |t: f64, x: f64| inner.eval_b(t, x).unwrap_or(f64::NAN) + 0.1;
        let bad = coeffs.check_drift_ode(&grid, Some(&perturbed));
        assert!(bad.max_residual >= 0.05, "{bad:?}");
    }

    #[test]
    fn band_examples_from_the_lemma() {
        let sqrt2 = tf(libm::sqrt(2.0));
        let up = classify_band_fns(&sqrt2, &tf(-1.0), 0.0, 1.0, 64, DEFAULT_STRICT_MARGIN);
        assert_eq!(up.band, Band::UpStrict);
        assert!((up.margin - 0.5).abs() < 1e-12);

        let frozen = classify_band_fns(&tf(0.0), &tf(0.0), 0.0, 1.0, 64, DEFAULT_STRICT_MARGIN);
        assert_eq!(frozen.band, Band::Frozen);

        let down = classify_band_fns(&tf(1.0), &tf(0.375), 0.0, 1.0, 64, DEFAULT_STRICT_MARGIN);
        assert_eq!(down.band, Band::DownStrict);
        assert!((down.margin - 0.125).abs() < 1e-12);

        let none = classify_band_fns(&tf(1.0), &tf(0.1), 0.0, 1.0, 64, DEFAULT_STRICT_MARGIN);
        assert_eq!(none.band, Band::Unclassified);
        assert!(none.margin < 0.0);
    }

    #[test]
    fn explosion_family_is_up_strict_for_all_checked_n() {
        let coeffs = CoefficientSet::multiplicative(tf(1.0), tf(0.0), tf(0.0), sqrt_2n_alpha());
        for n in 1..=50 {
            let band = coeffs.classify_band(n, 0.0, 5.0, 128, DEFAULT_STRICT_MARGIN).unwrap();
            assert_eq!(band.band, Band::UpStrict, "n = {n}: {band:?}");
        }
    }
}
