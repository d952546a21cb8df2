// Float functions that are not available in `core`.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// `1 - exp(-x)` without cancellation for small `x`.
#[inline]
pub(crate) fn one_minus_exp_neg(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else {
        -libm::expm1(-x)
    }
}
