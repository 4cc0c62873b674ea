//! Grid-based checklist of the standing assumptions. Every item reports the
//! checked window, the margin and the worst grid point; "pass" always means
//! "holds on the sampled grid", never a proof.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::coefficients::{Band, Mode};
use crate::error::Error;
use crate::math;
use crate::regime_solver::{bijectivity_bound, globality_bound, FamilyScanOptions, ProblemSpec};
use crate::transform::transform_reference;

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Checked time window `[0, window]`.
    pub window: f64,
    /// Grid density per unit of time.
    pub grid_per_unit: usize,
    /// How many regimes of a parametric family to classify.
    pub n_cap: usize,
    /// Uniform-strictness floor relative to `sup alpha²`.
    pub strict_margin: f64,
    /// How many levels to probe for ordering.
    pub level_probe: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { window: 10.0, grid_per_unit: 2048, n_cap: 32, strict_margin: 1e-9, level_probe: 64 }
    }
}

impl CheckOptions {
    fn grid_points(&self) -> usize {
        ((self.window.max(1e-6) * self.grid_per_unit as f64) as usize).clamp(16, 1 << 20)
    }
}

#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    /// Slack of the binding inequality; negative on failure.
    pub margin: Option<f64>,
    pub worst_t: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failed_names(&self) -> Vec<String> {
        self.items.iter().filter(|i| !i.passed).map(|i| i.name.to_string()).collect()
    }
}

fn grid_iter(window: f64, points: usize) -> impl Iterator<Item = f64> {
    let n = points.max(2);
    (0..n).map(move |i| window * i as f64 / (n - 1) as f64)
}

fn sigma_item(problem: &ProblemSpec, opts: &CheckOptions) -> (CheckItem, Option<String>) {
    let coeffs = &problem.coeffs;
    let mut margin = f64::INFINITY;
    let mut worst_t = None;
    let mut failure: Option<String> = None;
    let mut sup_s1: f64 = 0.0;
    let mut sup_s2: f64 = 0.0;
    for t in grid_iter(opts.window, opts.grid_points()) {
        let s1 = coeffs.sigma1(t);
        let s2 = coeffs.sigma2(t);
        let d1 = coeffs.sigma1_deriv(t);
        let d2 = coeffs.sigma2_deriv(t);
        if ![s1, s2, d1, d2].iter().all(|v| v.is_finite()) {
            failure = Some(format!("sigma or its derivative not finite at t = {t}"));
            worst_t = Some(t);
            margin = f64::NEG_INFINITY;
            break;
        }
        sup_s1 = sup_s1.max(s1);
        sup_s2 = sup_s2.max(s2);
        let m = match coeffs.mode() {
            Mode::Additive => {
                if s1 != 0.0 {
                    failure = Some(format!("additive mode needs sigma1 == 0, got {s1} at t = {t}"));
                    worst_t = Some(t);
                    break;
                }
                s2
            }
            Mode::Multiplicative => {
                if s2 < 0.0 {
                    failure = Some(format!("sigma2 negative at t = {t}"));
                    worst_t = Some(t);
                    break;
                }
                s1
            }
        };
        if m < margin {
            margin = m;
            worst_t = Some(t);
        }
    }
    let positive = failure.is_none() && margin > 0.0;
    let detail = failure.unwrap_or_else(|| {
        format!(
            "{} mode: min active sigma = {margin:.6e} on [0, {}]",
            coeffs.mode(),
            opts.window
        )
    });
    let note = format!(
        "boundedness checked on [0, {}] only: sup sigma1 = {sup_s1:.6e}, sup sigma2 = {sup_s2:.6e}",
        opts.window
    );
    (
        CheckItem { name: "(As-sigma)", passed: positive, margin: Some(margin), worst_t, detail },
        Some(note),
    )
}

fn drift_item(problem: &ProblemSpec, opts: &CheckOptions) -> CheckItem {
    let coeffs = &problem.coeffs;
    let t1 = opts.window.min(2.0);
    let nt = 48;
    let nx = 48;
    let mut max_residual: f64 = 0.0;
    let mut worst_t = None;
    for i in 0..nt {
        let t = t1 * i as f64 / (nt - 1) as f64;
        if coeffs.mode_check(t).is_err() {
            continue;
        }
        let lower = coeffs.domain_lower(t);
        for j in 0..nx {
            let x = match coeffs.mode() {
                Mode::Additive => -5.0 + 10.0 * j as f64 / (nx - 1) as f64,
                Mode::Multiplicative => lower + 0.1 + 9.9 * j as f64 / (nx - 1) as f64,
            };
            let mut h = 1e-6 * math::abs(x).max(1.0);
            if lower.is_finite() && x - h <= lower {
                h = 0.5 * (x - lower);
            }
            let b = |xx: f64| coeffs.eval_b(t, xx).unwrap_or(f64::NAN);
            let dbdx = (b(x + h) - b(x - h)) / (2.0 * h);
            let s1 = coeffs.sigma1(t);
            let r = math::abs(
                s1 * b(x) - (dbdx * (s1 * x + coeffs.sigma2(t)) - coeffs.sigma1_deriv(t) * x - coeffs.sigma2_deriv(t)),
            );
            if r.is_nan() || r > max_residual {
                max_residual = r;
                worst_t = Some(t);
                if r.is_nan() {
                    break;
                }
            }
        }
    }
    let passed = max_residual.is_finite() && max_residual <= 1e-6;
    CheckItem {
        name: "(As-b)",
        passed,
        margin: Some(1e-6 - max_residual),
        worst_t,
        detail: format!("max drift ODE residual {max_residual:.3e} (central differences)"),
    }
}

fn initial_law_item(problem: &ProblemSpec) -> CheckItem {
    let mu = problem.initial_mean;
    let var = problem.initial_var;
    let margin = 0.5 * var - math::abs(mu);
    let passed = var > 0.0 && margin >= 0.0;
    CheckItem {
        name: "(As-x0)",
        passed,
        margin: Some(margin),
        worst_t: None,
        detail: format!("|{mu}| <= {var}/2 must hold for the transformed initial law"),
    }
}

fn levels_item(problem: &ProblemSpec, opts: &CheckOptions) -> (CheckItem, Option<String>) {
    let mut cursor = problem.level_cursor();
    let mut produced = 0usize;
    let mut first_error: Option<Error> = None;
    let mut last_y = 0.0f64;
    for _ in 0..opts.level_probe {
        match cursor.next() {
            Some(Ok(level)) => {
                produced += 1;
                last_y = level.y;
            }
            Some(Err(e)) => {
                first_error = Some(e);
                break;
            }
            None => break,
        }
    }
    let passed = first_error.is_none() && produced > 0;
    let detail = match &first_error {
        Some(e) => format!("level ladder invalid: {e}"),
        None if produced == 0 => "no levels defined".to_string(),
        None => format!("{produced} level(s) probed, strictly increasing, last y = {last_y:.12}"),
    };
    let note = match problem.levels.count() {
        Some(c) => Some(format!(
            "finite ladder of {c} level(s); the interval above the last level runs unbounded"
        )),
        None => Some(format!(
            "infinite ladder probed up to {} level(s); the limit toward 1 is not verifiable numerically",
            opts.level_probe
        )),
    };
    (
        CheckItem { name: "(As-I)", passed, margin: None, worst_t: None, detail },
        note,
    )
}

fn reference_item(problem: &ProblemSpec, opts: &CheckOptions) -> CheckItem {
    match transform_reference(
        &problem.coeffs,
        &problem.reference,
        (0.0, opts.window),
        opts.grid_points(),
        Some(problem.initial_mean),
    ) {
        Err(Error::Domain { t, x, lower }) => CheckItem {
            name: "(As-r)",
            passed: false,
            margin: None,
            worst_t: Some(t),
            detail: format!("r({t}) = {x} leaves U_t (lower bound {lower})"),
        },
        Err(e) => CheckItem {
            name: "(As-r)",
            passed: false,
            margin: None,
            worst_t: None,
            detail: format!("{e}"),
        },
        Ok((_, report)) => {
            let passed = report.non_decreasing() && report.sup_bound_ok();
            CheckItem {
                name: "(As-r)",
                passed,
                margin: report.sup_bound_margin,
                worst_t: report.decreasing_at,
                detail: report.summary(),
            }
        }
    }
}

fn band_item(problem: &ProblemSpec, opts: &CheckOptions) -> (CheckItem, Option<String>) {
    let coeffs = &problem.coeffs;
    let n_max = coeffs
        .alpha_family()
        .count()
        .map_or(opts.n_cap, |c| c.min(opts.n_cap));
    let mut worst_margin = f64::INFINITY;
    let mut worst_n = 0usize;
    let mut failure: Option<String> = None;
    for n in 1..=n_max {
        match coeffs.classify_band(n, 0.0, opts.window, opts.grid_points(), opts.strict_margin) {
            Ok(band) => {
                if band.band != Band::UpStrict {
                    failure = Some(format!(
                        "regime {n} classifies as {} (margin {:.3e}); the rising band with uniform strictness is required",
                        band.band, band.margin
                    ));
                    worst_margin = band.margin;
                    worst_n = n;
                    break;
                }
                if band.margin < worst_margin {
                    worst_margin = band.margin;
                    worst_n = n;
                }
            }
            Err(e) => {
                failure = Some(format!("regime {n}: {e}"));
                worst_n = n;
                break;
            }
        }
    }
    let passed = failure.is_none();
    let detail = failure.unwrap_or_else(|| {
        format!("regimes 1..={n_max} all UpStrict; weakest margin {worst_margin:.6e} at n = {worst_n}")
    });
    let note = if coeffs.alpha_family().count().is_none() {
        Some(format!("drift band checked for n <= {n_max} of an unbounded family"))
    } else {
        None
    };
    (
        CheckItem {
            name: "(As-beta_n)",
            passed,
            margin: Some(worst_margin),
            worst_t: None,
            detail,
        },
        note,
    )
}

/// Runs the full checklist. Failures never abort the report; the solver's
/// gate and the CLI exit code interpret it.
pub fn check_assumptions(problem: &ProblemSpec, opts: &CheckOptions) -> CheckReport {
    let mut items = Vec::with_capacity(6);
    let mut notes = Vec::new();

    let (sigma, sigma_note) = sigma_item(problem, opts);
    items.push(sigma);
    if let Some(n) = sigma_note {
        notes.push(n);
    }
    items.push(drift_item(problem, opts));
    items.push(initial_law_item(problem));
    let (levels, level_note) = levels_item(problem, opts);
    items.push(levels);
    if let Some(n) = level_note {
        notes.push(n);
    }
    items.push(reference_item(problem, opts));
    let (band, band_note) = band_item(problem, opts);
    items.push(band);
    if let Some(n) = band_note {
        notes.push(n);
    }

    let scan = FamilyScanOptions { window: opts.window, ..FamilyScanOptions::default() };
    let glob = globality_bound(problem, &scan);
    notes.push(if glob.holds {
        format!("global lifetime condition holds: {}", glob.detail)
    } else {
        format!("global lifetime condition NOT certified: {}", glob.detail)
    });
    let bij = bijectivity_bound(problem, &scan);
    notes.push(if bij.holds {
        format!("level-attainment condition holds: {}", bij.detail)
    } else {
        format!("level-attainment condition NOT certified: {}", bij.detail)
    });

    CheckReport { items, notes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{sqrt_2n_alpha, uniform_alpha, CoefficientSet};
    use crate::expr::TimeFunction;
    use crate::regime_solver::Levels;

    fn tf(c: f64) -> TimeFunction {
        TimeFunction::constant(c)
    }

    fn explosion_problem() -> ProblemSpec {
        let coeffs = CoefficientSet::multiplicative(tf(1.0), tf(0.0), tf(0.0), sqrt_2n_alpha());
        ProblemSpec::new(
            coeffs,
            0.0,
            1.0,
            tf(1.0),
            Levels::Probabilities(alloc::vec![0.6, 0.7, 0.8]),
            1e6,
        )
        .unwrap()
    }

    #[test]
    fn explosion_problem_passes_with_globality_note() {
        let report = check_assumptions(&explosion_problem(), &CheckOptions::default());
        assert!(report.all_passed(), "{report:#?}");
        assert!(report.notes.iter().any(|n| n.contains("NOT certified")));
    }

    #[test]
    fn mean_bound_violation_fails_the_initial_item() {
        let coeffs = CoefficientSet::multiplicative(tf(1.0), tf(0.0), tf(0.0), sqrt_2n_alpha());
        let problem = ProblemSpec::new(
            coeffs,
            1.0,
            1.0,
            tf(1.0),
            Levels::Probabilities(alloc::vec![0.6]),
            1e6,
        )
        .unwrap();
        let report = check_assumptions(&problem, &CheckOptions::default());
        let item = report.items.iter().find(|i| i.name == "(As-x0)").unwrap();
        assert!(!item.passed);
        assert!(item.margin.unwrap() < 0.0);
    }

    #[test]
    fn decreasing_reference_fails() {
        let coeffs = CoefficientSet::multiplicative(tf(1.0), tf(0.0), tf(0.0), sqrt_2n_alpha());
        // rho(t) = -t is decreasing
        let problem = ProblemSpec::new(
            coeffs,
            0.0,
            1.0,
            TimeFunction::exp_linear(-1.0, 0.0),
            Levels::Probabilities(alloc::vec![0.6]),
            1e6,
        )
        .unwrap();
        let report = check_assumptions(&problem, &CheckOptions::default());
        let item = report.items.iter().find(|i| i.name == "(As-r)").unwrap();
        assert!(!item.passed, "{item:?}");
    }

    #[test]
    fn out_of_band_regimes_fail() {
        // beta = ell - alpha^2/2 = +3/8 with alpha = 1 sits in the falling band
        let coeffs = CoefficientSet::multiplicative(tf(1.0), tf(0.0), tf(0.875), uniform_alpha(tf(1.0)));
        let problem = ProblemSpec::new(
            coeffs,
            0.0,
            1.0,
            tf(1.0),
            Levels::Probabilities(alloc::vec![0.6]),
            1e6,
        )
        .unwrap();
        let report = check_assumptions(&problem, &CheckOptions::default());
        let item = report.items.iter().find(|i| i.name == "(As-beta_n)").unwrap();
        assert!(!item.passed);
    }
}
