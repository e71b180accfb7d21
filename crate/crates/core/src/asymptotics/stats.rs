//! Sample statistics used by the convergence reports.

use serde::Serialize;
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};

use crate::math::norm_cdf;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance; `NaN` below two observations.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let m = mean(x);
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

pub fn skewness(x: &[f64]) -> f64 {
    if x.len() < 3 {
        return f64::NAN;
    }
    let (m2, m3, _) = central_moments(x);
    m3 / m2.powf(1.5)
}

pub fn excess_kurtosis(x: &[f64]) -> f64 {
    if x.len() < 4 {
        return f64::NAN;
    }
    let (m2, _, m4) = central_moments(x);
    m4 / (m2 * m2) - 3.0
}

/// Kolmogorov-Smirnov distance between the empirical law of `x` and the
/// standard normal.
pub fn ks_distance_normal(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &z)| {
            let f = norm_cdf(z);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Two-sided `level` confidence interval for a population variance from a
/// sample variance with `n` observations, assuming normal data.
pub fn variance_interval(sample_var: f64, n: usize, level: f64) -> (f64, f64) {
    if n < 2 || !sample_var.is_finite() {
        return (f64::NAN, f64::NAN);
    }
    let dof = (n - 1) as f64;
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    let tail = 0.5 * (1.0 - level);
    (dof * sample_var / quantile(&chi, 1.0 - tail), dof * sample_var / quantile(&chi, tail))
}

/// Chi-square quantile, Newton-polished on the CDF.
fn quantile(chi: &ChiSquared, p: f64) -> f64 {
    let mut x = chi.inverse_cdf(p);
    for _ in 0..4 {
        let step = (chi.cdf(x) - p) / chi.pdf(x);
        x -= step;
        if step.abs() <= 1e-15 * x {
            break;
        }
    }
    x
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn of_mean(x: &[f64]) -> Self {
        Self {
            value: mean(x),
            std_error: (variance(x) / x.len() as f64).sqrt(),
        }
    }
}

/// `E[X]/E[Y]` with a delta-method standard error.
pub fn ratio_of_means(x: &[f64], y: &[f64]) -> Estimate {
    let n = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let r = mx / my;
    if x.len() < 2 {
        return Estimate {
            value: r,
            std_error: f64::NAN,
        };
    }
    let resid: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - r * b).collect();
    Estimate {
        value: r,
        std_error: (variance(&resid) / n).sqrt() / my.abs(),
    }
}
