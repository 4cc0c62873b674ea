//! Sequential construction of the regime schedule: each regime runs until
//! the distribution function reaches its level, the law restarts with the
//! accumulated drift and variance, and the next regime takes over. The
//! builder detects accumulation of switch times (finite lifetime), level
//! exhaustion and horizon truncation, and certifies the bounded/positive
//! volatility-family conditions.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::checks::{check_assumptions, CheckOptions};
use crate::coefficients::{AlphaFamily, CoefficientSet};
use crate::error::{Error, Result};
use crate::expr::TimeFunction;
use crate::gaussian_law::{std_normal_cdf, std_normal_quantile, LawCurve};
use crate::math;
use crate::quadrature::QuadratureConfig;
use crate::transform::Rho;

/// Full problem description: coefficients, transformed initial law,
/// reference function, level partition and working horizon.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProblemSpec {
    pub coeffs: CoefficientSet,
    /// Mean of the transformed initial condition.
    pub initial_mean: f64,
    /// Variance of the transformed initial condition.
    pub initial_var: f64,
    /// Reference function `r(t)` in the original coordinates.
    pub reference: TimeFunction,
    pub levels: Levels,
    pub horizon: f64,
}

impl ProblemSpec {
    pub fn new(
        coeffs: CoefficientSet,
        initial_mean: f64,
        initial_var: f64,
        reference: TimeFunction,
        levels: Levels,
        horizon: f64,
    ) -> Result<Self> {
        if !(initial_var > 0.0) {
            return Err(Error::invalid(format!("initial variance must be positive, got {initial_var}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { coeffs, initial_mean, initial_var, reference: reference.simplify(), levels, horizon })
    }

    /// Image of the reference under the state transformation.
    pub fn rho(&self) -> Rho {
        Rho::transformed(self.coeffs.clone(), self.reference.clone())
    }

    /// `(alpha_n, beta_n)` of regime `n`, with the index bound.
    pub fn regime(&self, n: usize) -> Result<(TimeFunction, TimeFunction)> {
        Ok((self.coeffs.alpha(n)?, self.coeffs.beta_fn(n)?))
    }

    pub fn level_cursor(&self) -> LevelCursor<'_> {
        LevelCursor::new(self)
    }
}

/// Level partition `0 = y_0 < y_1 < ... < 1`, supplied as probabilities, a
/// closed form in the index, or generated from target switch times through
/// the problem's own regime family (which keeps the deep-tail levels exact in
/// quantile space where the probabilities saturate to 1 in floating point).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Levels {
    Probabilities(Vec<f64>),
    /// `y_n = expr(n)` for `n = 1, 2, ...`, optionally truncated.
    IndexRule { expr: TimeFunction, count: Option<usize> },
    /// `y_n = phi_hat(t_n)` where `phi_hat` runs regime `k` on
    /// `[t_{k-1}, t_k)` from the problem's initial law.
    FromTimes { times: TimesRule, count: Option<usize> },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TimesRule {
    List(Vec<f64>),
    /// `t_n = expr(n)`, strictly increasing with `t_0 = 0` implied.
    IndexRule(TimeFunction),
}

impl Levels {
    pub fn count(&self) -> Option<usize> {
        match self {
            Levels::Probabilities(v) => Some(v.len()),
            Levels::IndexRule { count, .. } => *count,
            Levels::FromTimes { times: TimesRule::List(v), count } => {
                Some(count.map_or(v.len(), |c| c.min(v.len())))
            }
            Levels::FromTimes { times: TimesRule::IndexRule(_), count } => *count,
        }
    }
}

/// One level in both representations: probability `y` and quantile `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Level {
    pub index: usize,
    pub y: f64,
    pub z: f64,
}

/// Sequential level producer; generated levels carry incremental integrals so
/// each step is O(1) for closed-form regimes.
pub struct LevelCursor<'a> {
    problem: &'a ProblemSpec,
    next_index: usize,
    quad: QuadratureConfig,
    // generator state for `FromTimes`
    prev_time: f64,
    b_cum: f64,
    a_cum: f64,
    prev_z: f64,
    exhausted: bool,
}

impl<'a> LevelCursor<'a> {
    fn new(problem: &'a ProblemSpec) -> Self {
        Self {
            problem,
            next_index: 1,
            quad: QuadratureConfig::DEFAULT,
            prev_time: 0.0,
            b_cum: 0.0,
            a_cum: 0.0,
            prev_z: f64::NEG_INFINITY,
            exhausted: false,
        }
    }

    fn produce(&mut self) -> Option<Result<Level>> {
        if self.exhausted {
            return None;
        }
        let n = self.next_index;
        let out = match &self.problem.levels {
            Levels::Probabilities(values) => {
                let y = *values.get(n - 1)?;
                std_normal_quantile(y).map(|z| Level { index: n, y, z })
            }
            Levels::IndexRule { expr, count } => {
                if count.map_or(false, |c| n > c) {
                    return None;
                }
                match expr.eval_index(n) {
                    Ok(y) => std_normal_quantile(y).map(|z| Level { index: n, y, z }),
                    Err(e) => Err(e),
                }
            }
            Levels::FromTimes { times, count } => {
                if count.map_or(false, |c| n > c) {
                    return None;
                }
                let t_n = match times {
                    TimesRule::List(list) => *list.get(n - 1)?,
                    TimesRule::IndexRule(expr) => match expr.eval_index(n) {
                        Ok(t) => t,
                        Err(e) => return Some(Err(e)),
                    },
                };
                self.generate_from_time(n, t_n)
            }
        };
        match out {
            Ok(level) => {
                if level.z <= self.prev_z {
                    self.exhausted = true;
                    return Some(Err(Error::invalid(format!(
                        "levels must be strictly increasing; level {n} has z = {} after {}",
                        level.z, self.prev_z
                    ))));
                }
                self.prev_z = level.z;
                self.next_index += 1;
                Some(Ok(level))
            }
            Err(e) => {
                self.exhausted = true;
                Some(Err(e))
            }
        }
    }

    fn generate_from_time(&mut self, n: usize, t_n: f64) -> Result<Level> {
        if !(t_n > self.prev_time) {
            return Err(Error::invalid(format!(
                "generator times must be strictly increasing; t_{n} = {t_n} after {}",
                self.prev_time
            )));
        }
        let (alpha, beta) = self.problem.regime(n)?;
        let db = beta.integrate(self.prev_time, t_n, &self.quad)?;
        let da = alpha.squared().integrate(self.prev_time, t_n, &self.quad)?;
        self.b_cum += db;
        self.a_cum += da;
        self.prev_time = t_n;
        let rho = self.problem.rho().eval(t_n);
        let mean = self.problem.initial_mean + self.b_cum;
        let var = self.problem.initial_var + self.a_cum;
        let z = (rho - mean) / math::sqrt(var);
        if !z.is_finite() {
            return Err(Error::invalid(format!("generated level {n} is not finite")));
        }
        Ok(Level { index: n, y: std_normal_cdf(z), z })
    }
}

impl<'a> Iterator for LevelCursor<'a> {
    type Item = Result<Level>;

    fn next(&mut self) -> Option<Self::Item> {
        self.produce()
    }
}

/// How a finished schedule relates to the true lifetime of the solution.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ScheduleStatus {
    /// The lifetime is provably infinite (bounded family, or finitely many
    /// levels all resolved under the standing assumptions).
    GlobalProven,
    /// Switch times accumulate; the extrapolated limit estimates the finite
    /// lifetime.
    FiniteTmax { estimate: f64 },
    /// The construction stopped at the working horizon without a conclusion.
    HorizonTruncated { horizon: f64 },
}

impl ScheduleStatus {
    pub fn is_finite_tmax(&self) -> bool {
        matches!(self, ScheduleStatus::FiniteTmax { .. })
    }
}

/// Crossing record: regime `regime` reached its level at `time` with the
/// stated cumulative integrals from the schedule start.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Breakpoint {
    pub regime: usize,
    pub time: f64,
    pub level_y: f64,
    pub level_z: f64,
    pub b_cum: f64,
    pub a_cum: f64,
}

/// One regime interval `[t_start, next breakpoint)`; the last segment is
/// open-ended for global or truncated schedules.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub regime: usize,
    pub t_start: f64,
    pub b_start: f64,
    pub a_start: f64,
    pub alpha: TimeFunction,
    pub beta: TimeFunction,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Schedule {
    pub start_time: f64,
    pub initial_mean: f64,
    pub initial_var: f64,
    pub rho: Rho,
    pub segments: Vec<Segment>,
    pub breakpoints: Vec<Breakpoint>,
    pub status: ScheduleStatus,
    pub notes: Vec<String>,
}

impl Schedule {
    /// Latest time the schedule describes.
    pub fn span_end(&self) -> f64 {
        match self.status {
            ScheduleStatus::GlobalProven => f64::INFINITY,
            ScheduleStatus::FiniteTmax { .. } => {
                self.breakpoints.last().map(|b| b.time).unwrap_or(self.start_time)
            }
            ScheduleStatus::HorizonTruncated { horizon } => horizon,
        }
    }

    pub fn segment_index_at(&self, t: f64) -> Result<usize> {
        if t < self.start_time || t > self.span_end() {
            return Err(Error::range(format!(
                "t = {t} outside the schedule span [{}, {}]",
                self.start_time,
                self.span_end()
            )));
        }
        let idx = self.segments.partition_point(|s| s.t_start <= t);
        Ok(idx.saturating_sub(1))
    }

    /// Law evaluator of one segment (restart offsets included).
    pub fn law_for_segment(&self, idx: usize) -> Result<LawCurve> {
        let seg = self
            .segments
            .get(idx)
            .ok_or_else(|| Error::range(format!("segment {idx} out of range")))?;
        LawCurve::new(
            (self.initial_mean, self.initial_var),
            (seg.b_start, seg.a_start),
            seg.t_start,
            seg.alpha.clone(),
            seg.beta.clone(),
            self.rho.clone(),
        )
    }

    /// Cumulative `(∫beta, ∫alpha²)` from the schedule start to `t`.
    pub fn cumulative_at(&self, t: f64) -> Result<(f64, f64)> {
        let idx = self.segment_index_at(t)?;
        let seg = &self.segments[idx];
        let law = self.law_for_segment(idx)?;
        let (db, da) = law.cumulative(t)?;
        Ok((seg.b_start + db, seg.a_start + da))
    }

    pub fn mean_var(&self, t: f64) -> Result<(f64, f64)> {
        let (b, a) = self.cumulative_at(t)?;
        Ok((self.initial_mean + b, self.initial_var + a))
    }

    pub fn f_value(&self, t: f64) -> Result<f64> {
        let idx = self.segment_index_at(t)?;
        self.law_for_segment(idx)?.f_value(t)
    }

    pub fn phi(&self, t: f64) -> Result<f64> {
        Ok(std_normal_cdf(self.f_value(t)?))
    }

    pub fn regime_at(&self, t: f64) -> Result<usize> {
        Ok(self.segments[self.segment_index_at(t)?].regime)
    }

    /// Probes every bounded interval (and the start of the tail) for the
    /// defining properties: the distribution function stays inside the
    /// interval's level band, increases strictly, and hits each level at the
    /// recorded time.
    pub fn validate(&self, probes_per_interval: usize) -> ScheduleValidation {
        let probes = probes_per_interval.max(2);
        let mut issues = Vec::new();
        let mut max_level_f_error: f64 = 0.0;
        let mut max_level_phi_error: f64 = 0.0;
        let mut checked = 0usize;
        for w in self.breakpoints.windows(2) {
            if w[1].time <= w[0].time {
                issues.push(format!("breakpoints not increasing at {}", w[1].time));
            }
        }
        for (i, bp) in self.breakpoints.iter().enumerate() {
            let law = match self.law_for_segment(i) {
                Ok(l) => l,
                Err(e) => {
                    issues.push(format!("segment {i}: {e}"));
                    continue;
                }
            };
            let seg = &self.segments[i];
            let z_lo = if i == 0 { f64::NEG_INFINITY } else { self.breakpoints[i - 1].level_z };
            let z_hi = bp.level_z;
            let mut prev_f = f64::NEG_INFINITY;
            for j in 0..probes {
                let t = seg.t_start + (bp.time - seg.t_start) * (j as f64 + 0.5) / probes as f64;
                match law.f_value(t) {
                    Ok(f) => {
                        checked += 1;
                        if f < z_lo - 1e-9 || f >= z_hi + 1e-9 {
                            issues.push(format!(
                                "interval {i}: f({t}) = {f} outside [{z_lo}, {z_hi})"
                            ));
                        }
                        if f <= prev_f {
                            issues.push(format!("interval {i}: not strictly increasing at t = {t}"));
                        }
                        prev_f = f;
                    }
                    Err(e) => issues.push(format!("interval {i}: {e}")),
                }
            }
            match law.f_value(bp.time) {
                Ok(f) => {
                    let err = math::abs(f - z_hi);
                    max_level_f_error = max_level_f_error.max(err);
                    max_level_phi_error =
                        max_level_phi_error.max(math::abs(std_normal_cdf(f) - bp.level_y));
                    if err > 1e-8 {
                        issues.push(format!(
                            "breakpoint {i}: |f - z| = {err:e} exceeds tolerance"
                        ));
                    }
                }
                Err(e) => issues.push(format!("breakpoint {i}: {e}")),
            }
        }
        // tail segment: the indicator constraint must keep holding for a while
        if self.segments.len() > self.breakpoints.len() {
            let i = self.segments.len() - 1;
            if let Ok(law) = self.law_for_segment(i) {
                let seg = &self.segments[i];
                let z_lo = self.breakpoints.last().map(|b| b.level_z).unwrap_or(f64::NEG_INFINITY);
                let horizon = match self.status {
                    ScheduleStatus::HorizonTruncated { horizon } => horizon,
                    _ => seg.t_start + 1.0,
                };
                let reach = (horizon - seg.t_start).max(1e-6).min(4.0);
                for j in 1..=probes.min(16) {
                    let t = seg.t_start + reach * j as f64 / probes.min(16) as f64;
                    if let Ok(f) = law.f_value(t) {
                        checked += 1;
                        if f < z_lo - 1e-9 {
                            issues.push(format!(
                                "tail regime {}: f({t}) = {f} falls below its level {z_lo}",
                                seg.regime
                            ));
                        }
                    }
                }
            }
        }
        ScheduleValidation {
            ok: issues.is_empty(),
            issues,
            max_level_f_error,
            max_level_phi_error,
            probes_checked: checked,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleValidation {
    pub ok: bool,
    pub issues: Vec<String>,
    pub max_level_f_error: f64,
    pub max_level_phi_error: f64,
    pub probes_checked: usize,
}

/// Outcome of a single level search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    Reached { time: f64, f_residual: f64 },
    NotReached { phi_at_horizon: f64 },
}

/// Tuning for the schedule builder.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub horizon: f64,
    /// Crossing tolerance in quantile space.
    pub f_tol: f64,
    /// Gap threshold coefficient: a step counts as accumulation when
    /// `T_n - T_{n-1} < t_atom_coeff * max(1, T_n)`.
    pub t_atom_coeff: f64,
    /// Number of consecutive accumulation steps that declare a finite
    /// lifetime.
    pub k_atom: usize,
    /// Hard cap on constructed regimes.
    pub max_regimes: usize,
    /// Run even when the assumption checklist fails.
    pub force: bool,
    pub quadrature: QuadratureConfig,
    pub check: CheckOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            horizon: 1e6,
            f_tol: 1e-12,
            t_atom_coeff: 1e-10,
            k_atom: 8,
            max_regimes: 200_000,
            force: false,
            quadrature: QuadratureConfig::DEFAULT,
            check: CheckOptions::default(),
        }
    }
}

/// First time after `start` where `phi` reaches the level (given in quantile
/// space): geometric bracket expansion, then a guarded false-position /
/// bisection hybrid. Slope-indicator probes inside the bracket reject
/// non-monotone curves.
pub fn find_crossing(
    law: &LawCurve,
    level_z: f64,
    start: f64,
    horizon: f64,
    step_hint: Option<f64>,
    f_tol: f64,
) -> Result<Crossing> {
    let f0 = law.f_value(start)?;
    if f0 >= level_z - f_tol {
        return Ok(Crossing::Reached { time: start, f_residual: math::abs(f0 - level_z) });
    }
    // expand geometrically until the level is bracketed or the horizon hit
    let mut h = step_hint.filter(|h| *h > 0.0).unwrap_or(0.25);
    h = h.max(f64::EPSILON * start.abs().max(1.0) * 4.0);
    let mut lo = start;
    let mut f_lo = f0;
    let (mut hi, mut f_hi);
    loop {
        let cand = (start + h).min(horizon);
        let fc = law.f_value(cand)?;
        if fc >= level_z {
            hi = cand;
            f_hi = fc;
            break;
        }
        lo = cand;
        f_lo = fc;
        if cand >= horizon {
            return Ok(Crossing::NotReached { phi_at_horizon: std_normal_cdf(fc) });
        }
        h *= 2.0;
    }
    for probe in [lo, 0.5 * (lo + hi), hi] {
        let slope = law.slope_sign(probe)?;
        if slope.g <= 0.0 {
            return Err(Error::Monotonicity { t: probe, g: slope.g });
        }
    }
    // Illinois false position with bisection fallback, working on f - z
    let mut fa = f_lo - level_z;
    let mut fb = f_hi - level_z;
    if fb == 0.0 {
        return Ok(Crossing::Reached { time: hi, f_residual: 0.0 });
    }
    let mut a = lo;
    let mut b = hi;
    let mut last_below = false;
    let mut best = (b, math::abs(fb));
    for _ in 0..256 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = law.f_value(c)? - level_z;
        if math::abs(fc) < best.1 {
            best = (c, math::abs(fc));
        }
        if math::abs(fc) <= f_tol {
            return Ok(Crossing::Reached { time: c, f_residual: math::abs(fc) });
        }
        if fc < 0.0 {
            if last_below {
                fb *= 0.5;
            }
            a = c;
            fa = fc;
            last_below = true;
        } else {
            if !last_below {
                fa *= 0.5;
            }
            b = c;
            fb = fc;
            last_below = false;
        }
        if b - a <= 2.0 * f64::EPSILON * b.abs().max(1.0) {
            break;
        }
    }
    Ok(Crossing::Reached { time: best.0, f_residual: best.1 })
}

/// Aitken acceleration of the last three switch times.
fn aitken_limit(times: &[f64]) -> f64 {
    let k = times.len();
    if k < 3 {
        return times.last().copied().unwrap_or(0.0);
    }
    let (x0, x1, x2) = (times[k - 3], times[k - 2], times[k - 1]);
    let d1 = x2 - x1;
    let d0 = x1 - x0;
    let denom = d1 - d0;
    if denom == 0.0 || !denom.is_finite() {
        return x2;
    }
    let est = x2 - d1 * d1 / denom;
    if est.is_finite() && est >= x2 {
        est
    } else {
        x2
    }
}

/// Runs the constructive existence algorithm.
///
/// The assumption checklist runs first and gates the build unless `force` is
/// set; its outcome also decides whether level exhaustion may claim a global
/// solution.
pub fn build_schedule(problem: &ProblemSpec, opts: &SolverOptions) -> Result<Schedule> {
    let report = check_assumptions(problem, &opts.check);
    let assumptions_ok = report.all_passed();
    if !assumptions_ok && !opts.force {
        return Err(Error::AssumptionsViolated { failed: report.failed_names() });
    }
    let rho = problem.rho();
    let mut notes: Vec<String> = Vec::new();
    if !assumptions_ok {
        notes.push(format!("forced run with failing checks: {}", report.failed_names().join(", ")));
    }

    let start_time = 0.0;
    let f_start = (rho.eval(start_time) - problem.initial_mean) / math::sqrt(problem.initial_var);
    if !f_start.is_finite() {
        return Err(Error::range("reference not evaluable at the start time".to_string()));
    }

    let mut cursor = problem.level_cursor();
    let mut segments: Vec<Segment> = Vec::new();
    let mut breakpoints: Vec<Breakpoint> = Vec::new();
    let mut b_cum = 0.0_f64;
    let mut a_cum = 0.0_f64;
    let mut prev_time = start_time;
    let mut step_hint: Option<f64> = None;
    let mut atom_run = 0usize;
    let mut skipped = 0usize;

    let status = loop {
        let level = match cursor.next() {
            Some(level) => level?,
            None => {
                // levels exhausted: the last interval reaches up to 1 and its
                // regime runs forever
                let n = breakpoints.last().map(|b| b.regime + 1).unwrap_or(skipped + 1);
                match problem.regime(n) {
                    Ok((alpha, beta)) => segments.push(Segment {
                        regime: n,
                        t_start: prev_time,
                        b_start: b_cum,
                        a_start: a_cum,
                        alpha,
                        beta,
                    }),
                    Err(e) => return Err(e),
                }
                if assumptions_ok {
                    notes.push("levels exhausted; tail regime runs on the final interval".to_string());
                    break ScheduleStatus::GlobalProven;
                } else {
                    notes.push(
                        "levels exhausted under a forced run; no globality claim".to_string(),
                    );
                    break ScheduleStatus::HorizonTruncated { horizon: opts.horizon };
                }
            }
        };
        // starting-index rule: intervals at or below the initial value of the
        // distribution function belong to already-passed regimes
        if level.z <= f_start && breakpoints.is_empty() && segments.is_empty() {
            skipped = level.index;
            continue;
        }
        let n = level.index;
        let (alpha, beta) = problem.regime(n)?;
        let law = LawCurve::new(
            (problem.initial_mean, problem.initial_var),
            (b_cum, a_cum),
            prev_time,
            alpha.clone(),
            beta.clone(),
            rho.clone(),
        )?
        .with_quadrature(opts.quadrature);
        segments.push(Segment {
            regime: n,
            t_start: prev_time,
            b_start: b_cum,
            a_start: a_cum,
            alpha,
            beta,
        });
        match find_crossing(&law, level.z, prev_time, opts.horizon, step_hint, opts.f_tol)? {
            Crossing::NotReached { phi_at_horizon } => {
                let global = check_globality(problem) && check_bijectivity(problem);
                notes.push(format!(
                    "level {n} (y = {}) not reached by the horizon (phi = {phi_at_horizon})",
                    level.y
                ));
                if global && assumptions_ok {
                    notes.push(
                        "bounded and positive volatility family certifies an infinite lifetime"
                            .to_string(),
                    );
                    break ScheduleStatus::GlobalProven;
                }
                break ScheduleStatus::HorizonTruncated { horizon: opts.horizon };
            }
            Crossing::Reached { time, .. } => {
                let (db, da) = law.cumulative(time)?;
                b_cum += db;
                a_cum += da;
                breakpoints.push(Breakpoint {
                    regime: n,
                    time,
                    level_y: level.y,
                    level_z: level.z,
                    b_cum,
                    a_cum,
                });
                let gap = time - prev_time;
                step_hint = Some(gap.max(f64::MIN_POSITIVE));
                let t_atom = opts.t_atom_coeff * time.abs().max(1.0);
                if gap < t_atom {
                    atom_run += 1;
                } else {
                    atom_run = 0;
                }
                prev_time = time;
                if atom_run >= opts.k_atom {
                    let times: Vec<f64> = breakpoints.iter().map(|b| b.time).collect();
                    let estimate = aitken_limit(&times);
                    notes.push(format!(
                        "switch times accumulate after {} regimes; extrapolated limit {estimate}",
                        breakpoints.len()
                    ));
                    break ScheduleStatus::FiniteTmax { estimate };
                }
                if breakpoints.len() >= opts.max_regimes {
                    notes.push(format!("regime cap {} reached", opts.max_regimes));
                    break ScheduleStatus::HorizonTruncated { horizon: opts.horizon };
                }
            }
        }
    };

    Ok(Schedule {
        start_time,
        initial_mean: problem.initial_mean,
        initial_var: problem.initial_var,
        rho,
        segments,
        breakpoints,
        status,
        notes,
    })
}

/// Certificate data for the bounded/positive family conditions.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub holds: bool,
    /// The certified constant (sup of `alpha²` for globality, inf for
    /// bijectivity) over the scanned grid and probes.
    pub constant: f64,
    pub n_checked: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Copy)]
pub struct FamilyScanOptions {
    pub window: f64,
    pub grid: usize,
    pub n_cap: usize,
}

impl Default for FamilyScanOptions {
    fn default() -> Self {
        Self { window: 10.0, grid: 512, n_cap: 16 }
    }
}

fn scan_alpha_sq(alpha: &TimeFunction, opts: &FamilyScanOptions) -> (f64, f64) {
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let n = opts.grid.max(2);
    for i in 0..n {
        let t = opts.window * i as f64 / (n - 1) as f64;
        let a = alpha.eval(t);
        let a2 = a * a;
        sup = sup.max(a2);
        inf = inf.min(a2);
    }
    // geometric horizon probes catch growth or decay past the window
    let mut t = opts.window.max(1.0);
    for _ in 0..50 {
        t *= 2.0;
        let a = alpha.eval(t);
        let a2 = a * a;
        if a2.is_nan() {
            break;
        }
        sup = sup.max(a2);
        inf = inf.min(a2);
    }
    (inf, sup)
}

fn family_members(problem: &ProblemSpec, opts: &FamilyScanOptions) -> (Vec<TimeFunction>, bool, String) {
    match problem.coeffs.alpha_family() {
        AlphaFamily::List(list) => (list.clone(), true, format!("explicit list of {}", list.len())),
        AlphaFamily::Parametric(expr) => {
            if expr.contains_index() {
                let members: Vec<TimeFunction> =
                    (1..=opts.n_cap).map(|n| expr.bind_index(n)).collect();
                (members, false, format!("parametric family sampled for n <= {}", opts.n_cap))
            } else {
                (alloc::vec![expr.clone()], true, "index-independent family".to_string())
            }
        }
    }
}

/// `true` when `sup_n sup_t alpha_n(t)^2` is certified finite on the scan.
pub fn check_globality(problem: &ProblemSpec) -> bool {
    globality_bound(problem, &FamilyScanOptions::default()).holds
}

pub fn globality_bound(problem: &ProblemSpec, opts: &FamilyScanOptions) -> BoundCheck {
    let (members, complete, basis) = family_members(problem, opts);
    let mut sup = f64::NEG_INFINITY;
    let mut sups = Vec::with_capacity(members.len());
    for m in &members {
        let (_, s) = scan_alpha_sq(m, opts);
        sups.push(s);
        sup = sup.max(s);
    }
    if !sup.is_finite() {
        return BoundCheck {
            holds: false,
            constant: f64::INFINITY,
            n_checked: members.len(),
            detail: format!("{basis}: sup alpha^2 diverges on the probes"),
        };
    }
    if !complete {
        // trend in n: monotone growth gets extrapolated with large-index probes
        let increasing = sups.windows(2).all(|w| w[1] >= w[0]) && sups.last() > sups.first();
        if increasing {
            if let AlphaFamily::Parametric(expr) = problem.coeffs.alpha_family() {
                let probe = expr.bind_index(1usize << 50);
                let (_, s_big) = scan_alpha_sq(&probe, opts);
                if !s_big.is_finite() || s_big > 1e12 * sup.max(1.0) {
                    return BoundCheck {
                        holds: false,
                        constant: f64::INFINITY,
                        n_checked: members.len(),
                        detail: format!("{basis}: sup alpha^2 grows without bound in n"),
                    };
                }
                sup = sup.max(s_big);
            }
        }
    }
    BoundCheck {
        holds: true,
        constant: sup,
        n_checked: members.len(),
        detail: format!("{basis}: sup alpha^2 = {sup} on the checked grid"),
    }
}

/// `true` when `inf_n inf_t alpha_n(t)^2` is certified positive on the scan.
pub fn check_bijectivity(problem: &ProblemSpec) -> bool {
    bijectivity_bound(problem, &FamilyScanOptions::default()).holds
}

pub fn bijectivity_bound(problem: &ProblemSpec, opts: &FamilyScanOptions) -> BoundCheck {
    let (members, complete, basis) = family_members(problem, opts);
    let mut inf = f64::INFINITY;
    let mut infs = Vec::with_capacity(members.len());
    for m in &members {
        let (i, _) = scan_alpha_sq(m, opts);
        infs.push(i);
        inf = inf.min(i);
    }
    if !complete {
        let decreasing = infs.windows(2).all(|w| w[1] <= w[0]) && infs.last() < infs.first();
        if decreasing {
            if let AlphaFamily::Parametric(expr) = problem.coeffs.alpha_family() {
                let probe = expr.bind_index(1usize << 50);
                let (i_big, _) = scan_alpha_sq(&probe, opts);
                inf = inf.min(i_big);
            }
        }
    }
    let holds = inf.is_finite() && inf > 0.0;
    let detail = if holds {
        format!("{basis}: inf alpha^2 = {inf} on the checked grid")
    } else {
        format!("{basis}: inf alpha^2 = {inf}; fails at horizon or within the family")
    };
    BoundCheck { holds, constant: inf, n_checked: members.len(), detail }
}

/// Breakpoint-variance report: the numeric signature of the lifetime
/// obstruction is a variance that climbs without settling.
#[derive(Debug, Clone)]
pub struct VarianceDivergenceReport {
    pub variances: Vec<f64>,
    pub monotone_increasing: bool,
    /// `v(T_{2k}) - v(T_k)` for the doublings inside the schedule.
    pub doubling_gains: Vec<f64>,
    pub unbounded_trend: bool,
    pub final_variance: f64,
}

pub fn variance_divergence_diagnostic(schedule: &Schedule) -> Result<VarianceDivergenceReport> {
    if schedule.breakpoints.len() < 2 {
        return Err(Error::range("variance diagnostic needs at least two breakpoints"));
    }
    let variances: Vec<f64> = schedule
        .breakpoints
        .iter()
        .map(|b| schedule.initial_var + b.a_cum)
        .collect();
    let monotone_increasing = variances.windows(2).all(|w| w[1] > w[0]);
    let mut doubling_gains = Vec::new();
    let mut k = 1usize;
    while 2 * k <= variances.len() {
        doubling_gains.push(variances[2 * k - 1] - variances[k - 1]);
        k *= 2;
    }
    let unbounded_trend = monotone_increasing && doubling_gains.iter().all(|g| *g > 0.0);
    Ok(VarianceDivergenceReport {
        final_variance: *variances.last().unwrap(),
        variances,
        monotone_increasing,
        doubling_gains,
        unbounded_trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{sqrt_2n_alpha, uniform_alpha};

    fn tf(c: f64) -> TimeFunction {
        TimeFunction::constant(c)
    }

    fn explosion_problem(levels: Levels) -> ProblemSpec {
        let coeffs = CoefficientSet::multiplicative(tf(1.0), tf(0.0), tf(0.0), sqrt_2n_alpha());
        ProblemSpec::new(coeffs, 0.0, 1.0, tf(1.0), levels, 1e6).unwrap()
    }

    #[test]
    fn generated_levels_recover_their_times() {
        // y_n = phi_hat(t_n) with t_n = n/(n+1) must send the solver back to
        // exactly those times
        let times = TimeFunction::index()
            .mul(TimeFunction::index().add(tf(1.0)).pow(-1.0));
        let problem = explosion_problem(Levels::FromTimes {
            times: TimesRule::IndexRule(times),
            count: Some(40),
        });
        let schedule = build_schedule(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(schedule.breakpoints.len(), 40);
        for bp in &schedule.breakpoints {
            let n = bp.regime as f64;
            let want = n / (n + 1.0);
            assert!(
                (bp.time - want).abs() <= 1e-8,
                "T_{} = {} vs {want}",
                bp.regime,
                bp.time
            );
        }
        let validation = schedule.validate(64);
        assert!(validation.ok, "{:?}", validation.issues);
    }

    #[test]
    fn unit_spaced_times_stay_global() {
        let problem = explosion_problem(Levels::FromTimes {
            times: TimesRule::IndexRule(TimeFunction::index()),
            count: Some(10),
        });
        let schedule = build_schedule(&problem, &SolverOptions::default()).unwrap();
        assert!(!schedule.status.is_finite_tmax());
        for bp in &schedule.breakpoints {
            assert!((bp.time - bp.regime as f64).abs() <= 1e-8);
        }
    }

    #[test]
    fn find_crossing_returns_start_when_already_attained() {
        let law = LawCurve::new(
            (0.0, 1.0),
            (0.0, 0.0),
            0.0,
            tf(libm::sqrt(2.0)),
            tf(-1.0),
            Rho::constant(0.0),
        )
        .unwrap();
        let z0 = law.f_value(0.0).unwrap();
        match find_crossing(&law, z0, 0.0, 100.0, None, 1e-12).unwrap() {
            Crossing::Reached { time, .. } => assert_eq!(time, 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn find_crossing_not_reached_on_a_falling_curve() {
        let law = LawCurve::new(
            (0.0, 1.0),
            (0.0, 0.0),
            0.0,
            tf(1.0),
            tf(0.375),
            Rho::constant(0.0),
        )
        .unwrap();
        let target = std_normal_quantile(0.6).unwrap();
        match find_crossing(&law, target, 0.0, 50.0, None, 1e-12).unwrap() {
            Crossing::NotReached { phi_at_horizon } => assert!(phi_at_horizon < 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn crossing_matches_closed_form_inverse() {
        // f(t) = (3/8) t / sqrt(1 + t); solve f(t) = z by hand and compare
        let law = LawCurve::new(
            (0.0, 1.0),
            (0.0, 0.0),
            0.0,
            tf(1.0),
            tf(-0.375),
            Rho::constant(0.0),
        )
        .unwrap();
        let z = 0.25f64;
        // 9/64 t^2 = z^2 (1 + t)
        let a = 9.0 / 64.0;
        let t_exact = (z * z + libm::sqrt(z.powi(4) + 4.0 * a * z * z)) / (2.0 * a);
        match find_crossing(&law, z, 0.0, 1e6, None, 1e-12).unwrap() {
            Crossing::Reached { time, .. } => {
                assert!((time - t_exact).abs() <= 1e-9 * t_exact, "{time} vs {t_exact}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn globality_and_bijectivity_certificates() {
        let unbounded = explosion_problem(Levels::Probabilities(alloc::vec![0.6]));
        assert!(!check_globality(&unbounded));
        assert!(check_bijectivity(&unbounded));

        let finite_list = ProblemSpec::new(
            CoefficientSet::multiplicative(
                tf(1.0),
                tf(0.0),
                tf(0.0),
                AlphaFamily::List(alloc::vec![tf(1.0), tf(2.0), tf(0.5)]),
            ),
            0.0,
            1.0,
            tf(1.0),
            Levels::Probabilities(alloc::vec![0.6]),
            1e6,
        )
        .unwrap();
        let bound = globality_bound(&finite_list, &FamilyScanOptions::default());
        assert!(bound.holds);
        assert!((bound.constant - 4.0).abs() < 1e-12);

        let with_zero = ProblemSpec::new(
            CoefficientSet::multiplicative(
                tf(1.0),
                tf(0.0),
                tf(0.0),
                AlphaFamily::List(alloc::vec![tf(1.0), tf(0.0)]),
            ),
            0.0,
            1.0,
            tf(1.0),
            Levels::Probabilities(alloc::vec![0.6]),
            1e6,
        )
        .unwrap();
        assert!(!check_bijectivity(&with_zero));

        let decaying = ProblemSpec::new(
            CoefficientSet::multiplicative(
                tf(1.0),
                tf(0.0),
                tf(0.0),
                uniform_alpha(TimeFunction::exp_linear(-1.0, 0.0)),
            ),
            0.0,
            1.0,
            tf(1.0),
            Levels::Probabilities(alloc::vec![0.6]),
            1e6,
        )
        .unwrap();
        assert!(check_globality(&decaying));
        assert!(!check_bijectivity(&decaying));
    }

    #[test]
    fn reindexing_skips_levels_already_passed() {
        // phi(0) = 0.5 sits above the first two levels; the schedule must
        // start at regime 3
        let coeffs = CoefficientSet::multiplicative(tf(1.0), tf(0.0), tf(0.125), uniform_alpha(tf(1.0)));
        let problem = ProblemSpec::new(
            coeffs,
            0.0,
            1.0,
            tf(1.0),
            Levels::Probabilities(alloc::vec![0.3, 0.4, 0.6, 0.7]),
            1e6,
        )
        .unwrap();
        let schedule = build_schedule(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(schedule.breakpoints[0].regime, 3);
        assert_eq!(schedule.breakpoints.len(), 2);
        assert!((schedule.phi(schedule.breakpoints[0].time).unwrap() - 0.6).abs() < 1e-9);
        let validation = schedule.validate(64);
        assert!(validation.ok, "{:?}", validation.issues);
    }

    #[test]
    fn assumption_gate_blocks_unless_forced() {
        // mean bound violated: |mu| > var/2
        let coeffs = CoefficientSet::multiplicative(tf(1.0), tf(0.0), tf(0.125), uniform_alpha(tf(1.0)));
        let problem = ProblemSpec::new(
            coeffs,
            1.0,
            1.0,
            tf(1.0),
            Levels::Probabilities(alloc::vec![0.9]),
            1e6,
        )
        .unwrap();
        assert!(matches!(
            build_schedule(&problem, &SolverOptions::default()),
            Err(Error::AssumptionsViolated { .. })
        ));
        let forced = SolverOptions { force: true, ..SolverOptions::default() };
        assert!(build_schedule(&problem, &forced).is_ok());
    }

    #[test]
    fn variance_diagnostic_on_the_finite_case() {
        let times = TimeFunction::index()
            .mul(TimeFunction::index().add(tf(1.0)).pow(-1.0));
        let problem = explosion_problem(Levels::FromTimes {
            times: TimesRule::IndexRule(times),
            count: Some(30),
        });
        let schedule = build_schedule(&problem, &SolverOptions::default()).unwrap();
        let report = variance_divergence_diagnostic(&schedule).unwrap();
        assert!(report.monotone_increasing);
        assert!(report.unbounded_trend);
        // v(T_30) = 1 + 2 sum_{k<=30} 1/(k+1)
        let mut want = 1.0;
        for k in 1..=30 {
            want += 2.0 / (k as f64 + 1.0);
        }
        assert!((report.final_variance - want).abs() < 1e-10);
    }
}
