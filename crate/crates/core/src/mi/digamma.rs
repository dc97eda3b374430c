//! The digamma function `psi(t) = d/dt ln Gamma(t)` for positive reals.

use crate::error::{Error, Result};

/// Shift point above which the asymptotic series is used.
const ASYMPTOTIC_FROM: f64 = 6.0;

/// `B_{2n} / (2n)` for n = 1..=7, the coefficients of `t^{-2n}` in the
/// asymptotic expansion `psi(t) ~ ln t - 1/(2t) - sum B_{2n} / (2n t^{2n})`.
const SERIES: [f64; 7] =
    [1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0, 1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0];

/// Digamma of a positive real.
///
/// Arguments below 6 are shifted up with `psi(t) = psi(t + 1) - 1/t`; the
/// truncated asymptotic series then has an error below `2e-13`.
pub fn digamma(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::DigammaDomain(t));
    }
    Ok(digamma_unchecked(t))
}

pub(crate) fn digamma_unchecked(mut t: f64) -> f64 {
    let mut shift = 0.0;
    while t < ASYMPTOTIC_FROM {
        shift -= 1.0 / t;
        t += 1.0;
    }
    let inv2 = 1.0 / (t * t);
    // Horner in t^-2, highest order first.
    let mut poly = 0.0;
    for c in SERIES.iter().rev() {
        poly = poly * inv2 + c;
    }
    shift + libm::log(t) - 0.5 / t - poly * inv2
}
