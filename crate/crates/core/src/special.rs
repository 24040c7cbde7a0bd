//! Special functions used by the variational updates.
//!
//! Both digamma and log-gamma shift their argument upward with the
//! recurrence until it reaches 10, then evaluate a
//! truncated Bernoulli series. Absolute accuracy target is 1e-12 for
//! arguments in `(0, 1e8]`.

use std::f64::consts::PI;

/// B_{2k} / (2k) for k = 1..7.
const DIGAMMA_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// B_{2k} / (2k (2k - 1)) for k = 1..7.
const STIRLING_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
];

const DIGAMMA_SHIFT: f64 = 10.0;
const LGAMMA_SHIFT: f64 = 10.0;

/// Digamma ψ(x) for x > 0. Returns NaN for non-positive or NaN input.
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    let mut z = x;
    while z < DIGAMMA_SHIFT {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    // Horner in 1/z^2, highest order first.
    let mut series = 0.0;
    for &c in DIGAMMA_SERIES.iter().rev() {
        series = series * inv2 + c;
    }
    acc + z.ln() - 0.5 / z - series * inv2
}

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let mut z = x;
    let mut prod = 1.0;
    while z < LGAMMA_SHIFT {
        prod *= z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for &c in STIRLING_SERIES.iter().rev() {
        series = series * inv2 + c;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series * inv - prod.ln()
}

/// E[log x] for x ~ Gamma(shape, rate).
#[inline]
pub fn gamma_expected_log(shape: f64, rate: f64) -> f64 {
    digamma(shape) - rate.ln()
}

/// Replaces log-scores with their normalized probabilities (max-subtracted
/// softmax). Returns the log normalizer.
pub fn softmax_in_place(scores: &mut [f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        let k = scores.len() as f64;
        scores.iter_mut().for_each(|s| *s = 1.0 / k);
        return max;
    }
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
    max + total.ln()
}
