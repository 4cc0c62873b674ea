//! Thin wrappers over `libm` so the crate computes identically with and
//! without `std`. All transcendental calls in this crate go through here.

#[inline(always)]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline(always)]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline(always)]
pub(crate) fn log1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline(always)]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline(always)]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline(always)]
pub(crate) fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `x^p` with fast paths for the exponents the expression trees use most.
#[inline]
pub(crate) fn powf(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 1.0 {
        x
    } else if p == -1.0 {
        1.0 / x
    } else if p == 0.5 {
        sqrt(x)
    } else {
        libm::pow(x, p)
    }
}
