//! Closed-form scalar functions of time as small expression trees.
//!
//! The tree language is deliberately minimal: constants, the time variable,
//! a free regime-index symbol `n`, sums, products, real powers, `exp`, `log`
//! and affine composition `f(a*t + b)`. Every node knows its structural
//! derivative, and an antiderivative is produced whenever one exists inside
//! the same language; integration falls back to adaptive quadrature
//! otherwise.

use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::quadrature::{self, QuadratureConfig};

/// A closed-form function of time.
///
/// Evaluation outside a node's domain (e.g. `log` of a non-positive value)
/// yields `NaN`; grid-based validity checks detect those points instead of
/// every call carrying a `Result`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TimeFunction {
    /// Constant value.
    Const(f64),
    /// The time variable `t`.
    Time,
    /// The free regime-index symbol `n`; bind it with [`TimeFunction::bind_index`].
    RegimeIndex,
    Add(Box<TimeFunction>, Box<TimeFunction>),
    Mul(Box<TimeFunction>, Box<TimeFunction>),
    /// `base^p` with a real exponent.
    Pow(Box<TimeFunction>, f64),
    Exp(Box<TimeFunction>),
    Log(Box<TimeFunction>),
    /// Composition `inner(scale * t + shift)`.
    Affine {
        scale: f64,
        shift: f64,
        inner: Box<TimeFunction>,
    },
}

use TimeFunction::*;

impl TimeFunction {
    pub fn constant(c: f64) -> Self {
        Const(c)
    }

    pub fn time() -> Self {
        Time
    }

    pub fn index() -> Self {
        RegimeIndex
    }

    /// `e^(a*t + b)` in a form whose antiderivative stays exact.
    pub fn exp_linear(a: f64, b: f64) -> Self {
        Affine { scale: a, shift: b, inner: Box::new(Exp(Box::new(Time))) }
    }

    pub fn add(self, rhs: TimeFunction) -> Self {
        Add(Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: TimeFunction) -> Self {
        self.add(rhs.neg())
    }

    pub fn mul(self, rhs: TimeFunction) -> Self {
        Mul(Box::new(self), Box::new(rhs))
    }

    pub fn div(self, rhs: TimeFunction) -> Self {
        self.mul(rhs.pow(-1.0))
    }

    pub fn neg(self) -> Self {
        Mul(Box::new(Const(-1.0)), Box::new(self))
    }

    pub fn scale(self, c: f64) -> Self {
        Mul(Box::new(Const(c)), Box::new(self))
    }

    pub fn pow(self, p: f64) -> Self {
        Pow(Box::new(self), p)
    }

    pub fn exp(self) -> Self {
        Exp(Box::new(self))
    }

    pub fn log(self) -> Self {
        Log(Box::new(self))
    }

    /// Composes `self` with the time substitution `t -> scale*t + shift`.
    pub fn compose_affine(self, scale: f64, shift: f64) -> Self {
        Affine { scale, shift, inner: Box::new(self) }
    }

    /// Squares the function; `simplify` keeps this exact for constants.
    pub fn squared(self) -> Self {
        self.pow(2.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Const(c) => *c,
            Time => t,
            RegimeIndex => f64::NAN,
            Add(a, b) => a.eval(t) + b.eval(t),
            Mul(a, b) => a.eval(t) * b.eval(t),
            Pow(a, p) => math::powf(a.eval(t), *p),
            Exp(a) => math::exp(a.eval(t)),
            Log(a) => {
                let v = a.eval(t);
                if v > 0.0 { math::ln(v) } else { f64::NAN }
            }
            Affine { scale, shift, inner } => inner.eval(scale * t + shift),
        }
    }

    /// True when no `Time` node is reachable, i.e. the value does not depend
    /// on `t` (it may still contain the free index symbol).
    pub fn is_const_in_time(&self) -> bool {
        match self {
            Const(_) | RegimeIndex => true,
            Time => false,
            Add(a, b) | Mul(a, b) => a.is_const_in_time() && b.is_const_in_time(),
            Pow(a, _) | Exp(a) | Log(a) => a.is_const_in_time(),
            Affine { scale, inner, .. } => *scale == 0.0 || inner.is_const_in_time(),
        }
    }

    pub fn contains_index(&self) -> bool {
        match self {
            RegimeIndex => true,
            Const(_) | Time => false,
            Add(a, b) | Mul(a, b) => a.contains_index() || b.contains_index(),
            Pow(a, _) | Exp(a) | Log(a) => a.contains_index(),
            Affine { inner, .. } => inner.contains_index(),
        }
    }

    /// Substitutes the free index symbol by the concrete regime number and
    /// folds the constants this exposes.
    pub fn bind_index(&self, n: usize) -> TimeFunction {
        self.substitute_index(n as f64).simplify()
    }

    fn substitute_index(&self, n: f64) -> TimeFunction {
        match self {
            RegimeIndex => Const(n),
            Const(_) | Time => self.clone(),
            Add(a, b) => Add(Box::new(a.substitute_index(n)), Box::new(b.substitute_index(n))),
            Mul(a, b) => Mul(Box::new(a.substitute_index(n)), Box::new(b.substitute_index(n))),
            Pow(a, p) => Pow(Box::new(a.substitute_index(n)), *p),
            Exp(a) => Exp(Box::new(a.substitute_index(n))),
            Log(a) => Log(Box::new(a.substitute_index(n))),
            Affine { scale, shift, inner } => Affine {
                scale: *scale,
                shift: *shift,
                inner: Box::new(inner.substitute_index(n)),
            },
        }
    }

    /// Structural derivative with respect to `t`.
    pub fn deriv(&self) -> TimeFunction {
        match self {
            Const(_) | RegimeIndex => Const(0.0),
            Time => Const(1.0),
            Add(a, b) => a.deriv().add(b.deriv()),
            Mul(a, b) => a.deriv().mul((**b).clone()).add((**a).clone().mul(b.deriv())),
            Pow(a, p) => {
                // p * a^(p-1) * a'
                Const(*p)
                    .mul((**a).clone().pow(p - 1.0))
                    .mul(a.deriv())
            }
            Exp(a) => Exp(a.clone()).mul(a.deriv()),
            Log(a) => a.deriv().mul((**a).clone().pow(-1.0)),
            Affine { scale, shift, inner } => Const(*scale).mul(Affine {
                scale: *scale,
                shift: *shift,
                inner: Box::new(inner.deriv()),
            }),
        }
    }

    /// Closed-form antiderivative in the same language, if one exists.
    ///
    /// Constants in `t` (including anything built on the free index symbol)
    /// always integrate to `value * t`; beyond that the rules cover sums,
    /// constant multiples, powers/`exp`/`log` of bare time, and any of those
    /// under an affine substitution.
    pub fn antiderivative(&self) -> Option<TimeFunction> {
        if self.is_const_in_time() {
            return Some(self.clone().mul(Time));
        }
        match self {
            Time => Some(Const(0.5).mul(Time.pow(2.0))),
            Add(a, b) => Some(a.antiderivative()?.add(b.antiderivative()?)),
            Mul(a, b) => {
                if a.is_const_in_time() {
                    Some((**a).clone().mul(b.antiderivative()?))
                } else if b.is_const_in_time() {
                    Some((**b).clone().mul(a.antiderivative()?))
                } else {
                    None
                }
            }
            Pow(a, p) if **a == Time => {
                if *p == -1.0 {
                    Some(Log(Box::new(Time)))
                } else {
                    Some(Const(1.0 / (p + 1.0)).mul(Time.pow(p + 1.0)))
                }
            }
            Exp(a) if **a == Time => Some(Exp(Box::new(Time))),
            Log(a) if **a == Time => {
                // t log t - t
                Some(Time.mul(Log(Box::new(Time))).sub(Time))
            }
            Affine { scale, shift, inner } if *scale != 0.0 => {
                let primitive = inner.antiderivative()?;
                Some(Const(1.0 / *scale).mul(Affine {
                    scale: *scale,
                    shift: *shift,
                    inner: Box::new(primitive),
                }))
            }
            _ => None,
        }
    }

    /// Constant folding plus a handful of normalizations (`x*1`, `x+0`,
    /// `exp(a*t+b)` into affine form, `exp(f)^p -> exp(p*f)`).
    ///
    /// `0 * f` folds to `0` even where `f` is undefined; the coefficient
    /// builders rely on this when a structurally vanishing term multiplies a
    /// logarithm.
    pub fn simplify(&self) -> TimeFunction {
        let node = match self {
            Const(_) | Time | RegimeIndex => self.clone(),
            Add(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Const(x), Const(y)) => Const(x + y),
                    (Const(z), _) if *z == 0.0 => b,
                    (_, Const(z)) if *z == 0.0 => a,
                    _ => a.add(b),
                }
            }
            Mul(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Const(x), Const(y)) => Const(x * y),
                    (Const(z), _) | (_, Const(z)) if *z == 0.0 => Const(0.0),
                    (Const(o), _) if *o == 1.0 => b,
                    (_, Const(o)) if *o == 1.0 => a,
                    // fold nested constant factors: c1 * (c2 * f) -> (c1*c2) * f
                    (Const(c1), Mul(x, y)) => {
                        if let Const(c2) = **x {
                            Const(c1 * c2).mul((**y).clone())
                        } else {
                            a.mul(b)
                        }
                    }
                    _ => a.mul(b),
                }
            }
            Pow(a, p) => {
                let a = a.simplify();
                if *p == 1.0 {
                    a
                } else if *p == 0.0 {
                    Const(1.0)
                } else {
                    match &a {
                        Const(c) => Const(math::powf(*c, *p)),
                        Exp(inner) => Exp(Box::new(Const(*p).mul((**inner).clone()))).simplify(),
                        _ => a.pow(*p),
                    }
                }
            }
            Exp(a) => {
                let a = a.simplify();
                match &a {
                    Const(c) => Const(math::exp(*c)),
                    other => match as_linear_in_time(other) {
                        Some((scale, shift)) if scale != 0.0 => TimeFunction::exp_linear(scale, shift),
                        _ => a.exp(),
                    },
                }
            }
            Log(a) => {
                let a = a.simplify();
                match &a {
                    Const(c) if *c > 0.0 => Const(math::ln(*c)),
                    other => match as_linear_in_time(other) {
                        Some((scale, shift)) if scale != 0.0 => Affine {
                            scale,
                            shift,
                            inner: Box::new(Log(Box::new(Time))),
                        },
                        _ => a.log(),
                    },
                }
            }
            Affine { scale, shift, inner } => {
                let inner = inner.simplify();
                if inner.is_const_in_time() {
                    inner
                } else if *scale == 1.0 && *shift == 0.0 {
                    inner
                } else {
                    Affine { scale: *scale, shift: *shift, inner: Box::new(inner) }
                }
            }
        };
        node
    }

    /// Definite integral over `[a, b]`, exact when an antiderivative exists.
    pub fn integrate(&self, a: f64, b: f64, quad: &QuadratureConfig) -> Result<f64> {
        self.integrator().integrate(a, b, quad)
    }

    /// Prepares the integral evaluator once so repeated calls stay cheap.
    pub fn integrator(&self) -> Integrator {
        let simplified = self.simplify();
        match simplified.antiderivative() {
            Some(primitive) => Integrator::Exact(primitive.simplify()),
            None => Integrator::Quadrature(simplified),
        }
    }

    /// Uniform sample of `(t, value)` pairs, endpoint inclusive.
    pub fn sample(&self, t0: f64, t1: f64, points: usize) -> Vec<(f64, f64)> {
        let n = points.max(2);
        (0..n)
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
                (t, self.eval(t))
            })
            .collect()
    }
}

/// Recognizes expressions of the form `a*t + b` (used to normalize
/// `exp`/`log` arguments into affine compositions with exact primitives).
fn as_linear_in_time(f: &TimeFunction) -> Option<(f64, f64)> {
    match f {
        Time => Some((1.0, 0.0)),
        Const(c) => Some((0.0, *c)),
        Mul(a, b) => match (&**a, &**b) {
            (Const(c), Time) | (Time, Const(c)) => Some((*c, 0.0)),
            _ => None,
        },
        Add(a, b) => {
            let (s1, c1) = as_linear_in_time(a)?;
            let (s2, c2) = as_linear_in_time(b)?;
            Some((s1 + s2, c1 + c2))
        }
        _ => None,
    }
}

/// Integral evaluator attached to one function: either the difference of an
/// exact primitive or adaptive quadrature on the simplified tree.
#[derive(Debug, Clone)]
pub enum Integrator {
    Exact(TimeFunction),
    Quadrature(TimeFunction),
}

impl Integrator {
    pub fn integrate(&self, a: f64, b: f64, quad: &QuadratureConfig) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        match self {
            Integrator::Exact(primitive) => Ok(primitive.eval(b) - primitive.eval(a)),
            Integrator::Quadrature(f) => quadrature::integrate(|t| f.eval(t), a, b, quad),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Integrator::Exact(_))
    }
}

/// Central-difference derivative used by validity checks and tests.
pub fn central_difference(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t + h) - f(t - h)) / (2.0 * h)
}

impl TimeFunction {
    /// Evaluates an index-only expression (levels given as a closed form in
    /// `n` use the same tree language with `RegimeIndex` as the variable).
    pub fn eval_index(&self, n: usize) -> Result<f64> {
        if !self.is_const_in_time() {
            return Err(Error::invalid("expression in n must not depend on t".to_string()));
        }
        let v = self.substitute_index(n as f64).eval(0.0);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::invalid("index expression evaluated to a non-finite value"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUAD: QuadratureConfig = QuadratureConfig::DEFAULT;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn eval_basic_nodes() {
        let f = TimeFunction::time().scale(2.0).add(TimeFunction::constant(1.0));
        assert_eq!(f.eval(3.0), 7.0);
        let g = TimeFunction::exp_linear(-1.0, 0.0);
        assert!((g.eval(1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_central_difference() {
        // mix of every node type
        let f = TimeFunction::time()
            .pow(1.5)
            .add(TimeFunction::exp_linear(-0.5, 0.2))
            .add(TimeFunction::time().add(TimeFunction::constant(1.0)).log())
            .mul(TimeFunction::constant(0.75));
        let df = f.deriv();
        for i in 1..=40 {
            let t = 0.1 + 0.2 * i as f64;
            let h = 1e-5 * t.abs().max(1.0);
            let numeric = central_difference(|u| f.eval(u), t, h);
            assert!(
                rel_err(df.eval(t), numeric) <= 1e-6,
                "t = {t}: analytic {} vs numeric {numeric}",
                df.eval(t)
            );
        }
    }

    #[test]
    fn antiderivative_derivative_roundtrip() {
        let cases = [
            TimeFunction::constant(3.25),
            TimeFunction::time(),
            TimeFunction::time().pow(2.0).scale(4.0),
            TimeFunction::time().pow(-1.0),
            TimeFunction::exp_linear(2.0, -1.0),
            TimeFunction::time().log(),
            TimeFunction::time().log().compose_affine(3.0, 2.0),
        ];
        for f in cases {
            let primitive = f.antiderivative().expect("closed form expected");
            let back = primitive.deriv();
            for i in 1..=30 {
                let t = 0.3 + 0.17 * i as f64;
                assert!(
                    rel_err(back.eval(t), f.eval(t)) <= 1e-12,
                    "{f:?} at t = {t}: {} vs {}",
                    back.eval(t),
                    f.eval(t)
                );
            }
        }
    }

    #[test]
    fn products_without_closed_form_fall_back_to_quadrature() {
        // t * exp(t) has no rule in this language
        let f = TimeFunction::time().mul(TimeFunction::time().exp());
        assert!(f.antiderivative().is_none());
        let got = f.integrate(0.0, 1.0, &QUAD).unwrap();
        // exact: (t-1)e^t on [0,1] = 1
        assert!((got - 1.0).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn constant_trees_integrate_exactly() {
        // sqrt(2n) squared with n bound is constant and must integrate exactly
        let alpha = TimeFunction::index().scale(2.0).pow(0.5);
        let alpha_sq = alpha.bind_index(7).squared().simplify();
        assert_eq!(alpha_sq, TimeFunction::Const(14.000000000000002)); // (sqrt(14))^2
        let integ = alpha_sq.integrator();
        assert!(integ.is_exact());
    }

    #[test]
    fn bind_index_folds_to_constant() {
        let beta = TimeFunction::index().scale(-1.0);
        assert_eq!(beta.bind_index(5), TimeFunction::Const(-5.0));
        assert!(!beta.bind_index(5).contains_index());
    }

    #[test]
    fn exp_of_linear_normalizes_to_exact_primitive() {
        // exp(-2t) written the "naive" way still integrates exactly
        let f = TimeFunction::time().scale(-2.0).exp().simplify();
        assert!(f.antiderivative().is_some());
        let got = f.integrate(0.0, 1.0, &QUAD).unwrap();
        let want = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn index_rule_evaluation() {
        // y_n = n / (n + 1)
        let rule = TimeFunction::index().mul(TimeFunction::index().add(TimeFunction::constant(1.0)).pow(-1.0));
        assert!((rule.eval_index(3).unwrap() - 0.75).abs() < 1e-15);
        let bad = TimeFunction::time();
        assert!(bad.eval_index(1).is_err());
    }
}
