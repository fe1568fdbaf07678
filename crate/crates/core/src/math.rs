//! Float helpers for a `no_std` build.

pub(crate) use libm::{exp, fabs, lgamma, log, log1p, sqrt};

/// Relative slack when turning a fractional mass into a unit count, so that
/// `0.35 * 100_000` counts as exactly 35_000 units.
const COUNT_EPS: f64 = 1e-9;

fn snap(x: f64) -> Option<f64> {
    let r = libm::round(x);
    (fabs(x - r) <= COUNT_EPS * fabs(r).max(1.0)).then_some(r)
}

/// `ceil(x)` for a nonnegative unit count, tolerant to rounding noise.
pub(crate) fn ceil_count(x: f64) -> usize {
    if x <= 0.0 {
        return 0;
    }
    snap(x).unwrap_or_else(|| libm::ceil(x)) as usize
}

/// `floor(x)` for a nonnegative unit count, tolerant to rounding noise.
pub(crate) fn floor_count(x: f64) -> usize {
    if x <= 0.0 {
        return 0;
    }
    snap(x).unwrap_or_else(|| libm::floor(x)) as usize
}
