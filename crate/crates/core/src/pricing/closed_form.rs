//! Black-Scholes closed forms for `P(S, R, Σ)` with call and put payoffs.

use super::GreekSet;
use crate::math::{norm_cdf, norm_pdf};

/// Full greek set of a call with strike `k` at `(s, r, sigma)`, `sigma > 0`.
pub fn call(s: f64, k: f64, r: f64, sigma: f64) -> GreekSet {
    let sd = sigma.sqrt();
    let d1 = ((s / k).ln() + r + 0.5 * sigma) / sd;
    let d2 = d1 - sd;
    let disc_k = k * (-r).exp();
    let pdf = norm_pdf(d1);
    let gamma = pdf / (s * sd);
    GreekSet {
        price: s * norm_cdf(d1) - disc_k * norm_cdf(d2),
        delta: norm_cdf(d1),
        gamma,
        d_sigma: 0.5 * s * pdf / sd,
        d_r: disc_k * norm_cdf(d2),
    }
}

pub fn put(s: f64, k: f64, r: f64, sigma: f64) -> GreekSet {
    let sd = sigma.sqrt();
    let d1 = ((s / k).ln() + r + 0.5 * sigma) / sd;
    let d2 = d1 - sd;
    let disc_k = k * (-r).exp();
    let pdf = norm_pdf(d1);
    GreekSet {
        price: disc_k * norm_cdf(-d2) - s * norm_cdf(-d1),
        delta: -norm_cdf(-d1),
        gamma: pdf / (s * sd),
        d_sigma: 0.5 * s * pdf / sd,
        d_r: -disc_k * norm_cdf(-d2),
    }
}

/// Delta and gamma only; the hitting-time trigger needs nothing else.
#[inline]
pub fn delta_gamma(call_side: bool, s: f64, k: f64, r: f64, sigma: f64) -> (f64, f64) {
    let sd = sigma.sqrt();
    let d1 = ((s / k).ln() + r + 0.5 * sigma) / sd;
    let delta = if call_side { norm_cdf(d1) } else { -norm_cdf(-d1) };
    (delta, norm_pdf(d1) / (s * sd))
}
