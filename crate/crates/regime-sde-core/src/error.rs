//! Error type shared by every module of the crate.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// State left the open domain `U_t` where the diffusion is positive.
    Domain { t: f64, x: f64, lower: f64 },
    /// Coefficient invariants (positivity of the active diffusion part) fail at `t`.
    Mode { t: f64, detail: String },
    /// Argument outside its admissible range (probability, grid time, ...).
    Range { detail: String },
    /// Adaptive quadrature exceeded its refinement depth.
    Quadrature { a: f64, b: f64, detail: String },
    /// A probe found a non-positive slope indicator where the crossing search
    /// requires a strictly increasing distribution function.
    Monotonicity { t: f64, g: f64 },
    /// An explicit coefficient list has no entry for the requested regime.
    RegimeExhausted { index: usize, available: usize },
    /// A pathology construction was called with an incompatible verdict.
    VerdictMismatch { required: &'static str, found: String },
    /// Particles left the closure of `U_t` during raw Euler stepping.
    DomainExit { time: f64, exited: usize },
    /// Problem construction rejected inconsistent data.
    InvalidProblem { detail: String },
    /// The standing assumptions failed and the caller did not force the run.
    AssumptionsViolated { failed: Vec<String> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { t, x, lower } => {
                write!(f, "x = {x} outside U_t = ({lower}, inf) at t = {t}")
            }
            Error::Mode { t, detail } => write!(f, "coefficient invariant failed at t = {t}: {detail}"),
            Error::Range { detail } => write!(f, "argument out of range: {detail}"),
            Error::Quadrature { a, b, detail } => {
                write!(f, "quadrature failed on [{a}, {b}]: {detail}")
            }
            Error::Monotonicity { t, g } => {
                write!(f, "slope indicator g({t}) = {g} <= 0 inside a crossing bracket")
            }
            Error::RegimeExhausted { index, available } => {
                write!(f, "regime {index} requested but only {available} are defined")
            }
            Error::VerdictMismatch { required, found } => {
                write!(f, "operation requires verdict {required}, problem classifies as {found}")
            }
            Error::DomainExit { time, exited } => {
                write!(f, "{exited} particle(s) left closure(U_t) at t = {time}")
            }
            Error::InvalidProblem { detail } => write!(f, "invalid problem: {detail}"),
            Error::AssumptionsViolated { failed } => {
                write!(f, "assumption checks failed ({}); pass force to run anyway", failed.join(", "))
            }
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    pub(crate) fn range(detail: impl Into<String>) -> Self {
        Error::Range { detail: detail.into() }
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidProblem { detail: detail.into() }
    }
}
