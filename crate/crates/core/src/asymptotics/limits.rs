//! Limit quantities of the hedging-error asymptotics.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::hedge::{StrategyConfig, StrategyKind, BUDGET_EPS};
use crate::market::PathGrid;
use crate::payoff::{Convexity, Payoff};
use crate::pricing::{default_kernel, PricingInputs, PricingKernel};

/// `|α ± 2|²/6`, `+` for convex payoffs.
pub fn q_prefactor(alpha: f64, convexity: Convexity) -> f64 {
    let a = alpha + convexity.sign() * 2.0;
    a * a / 6.0
}

/// Leland's asymptotic variance coefficient
/// `β(x) = x²/2 + √(2/π)x + 1 - 2/π`.
pub fn beta(x: f64) -> f64 {
    0.5 * x * x + (2.0 / PI).sqrt() * x + 1.0 - 2.0 / PI
}

/// Hitting-time coefficient `β̂(x) = πx²/12 + (√(2π)/3)x + 2/3`.
pub fn beta_hat(x: f64) -> f64 {
    PI * x * x / 12.0 + (2.0 * PI).sqrt() / 3.0 * x + 2.0 / 3.0
}

/// `α = (σ/κ₀)√(π/2)`, which gives the hitting-time strategy the same
/// initial value as Leland's.
pub fn alpha_from_kappa0(sigma: f64, kappa0: f64) -> f64 {
    sigma / kappa0 * (PI / 2.0).sqrt()
}

/// Limit of `κ²·N_t`: `⟨log S̃⟩_t / α²`.
pub fn count_limit(qv: f64, alpha: f64) -> f64 {
    qv / (alpha * alpha)
}

/// `Q_t = (|α±2|²/6)∫₀ᵗ |S̃Γ^{±α}|² d⟨S̃⟩` on every grid point, by the
/// trapezoidal rule with `d⟨S̃⟩ = S̃²·d⟨log S̃⟩`.
pub fn limit_q(path: &PathGrid, payoff: &Payoff, cfg: &StrategyConfig) -> Result<Vec<f64>> {
    limit_q_with(path, payoff, cfg, default_kernel())
}

pub fn limit_q_with(path: &PathGrid, payoff: &Payoff, cfg: &StrategyConfig, kernel: &PricingKernel) -> Result<Vec<f64>> {
    if cfg.kind != StrategyKind::HittingTime {
        return Err(invalid("limit_q needs a hitting_time strategy config"));
    }
    cfg.validate(payoff)?;
    let budget = cfg.sigma_hat_sq;
    if let Some(i) = path.qv.iter().position(|&q| q >= budget * (1.0 - BUDGET_EPS)) {
        return Err(Error::Domain(format!(
            "variance budget is spent at t = {}; Q is only defined before that",
            path.times[i]
        )));
    }
    let factor = cfg.variance_factor(payoff);
    let energy = |i: usize| -> Result<f64> {
        let s = path.s_tilde[i];
        let inputs = PricingInputs {
            spot: s,
            log_discount: 0.0,
            variance: factor * (budget - path.qv[i]),
        };
        let (_, g) = kernel.delta_gamma(payoff, inputs)?;
        let x = s * s * g;
        Ok(x * x)
    };
    let c = q_prefactor(cfg.alpha, payoff.convexity());
    let mut q = Vec::with_capacity(path.len());
    q.push(0.0);
    let mut acc = 0.0;
    let mut prev = energy(0)?;
    for i in 1..path.len() {
        let cur = energy(i)?;
        acc += 0.5 * (prev + cur) * (path.qv[i] - path.qv[i - 1]);
        q.push(c * acc);
        prev = cur;
    }
    Ok(q)
}

/// `E[Q_t]` under Black-Scholes with zero rate: `Σ̂ - ⟨log S̃⟩_u = Σ̂ - σ²u`
/// is deterministic, so `E[Q_t] = c·σ²∫₀ᵗ E[S̃_u⁴ Γ_u²] du` reduces to a
/// double integral over time and a Gaussian. The time integral is taken in
/// `v` with `u = t(1 - v²)`, which removes the `(t - u)^{-1/2}` growth when
/// the budget is spent at `t`. Semi-analytic oracle for tests.
pub fn expected_q_black_scholes(spot: f64, sigma: f64, payoff: &Payoff, cfg: &StrategyConfig, t: f64) -> Result<f64> {
    use crate::math::norm_pdf;
    use crate::pricing::quadrature::adaptive_gk;
    let kernel = default_kernel();
    let factor = cfg.variance_factor(payoff);
    let var = sigma * sigma;
    let kinks = payoff.kinks();
    let inner = |u: f64| -> Result<f64> {
        let sd = sigma * u.sqrt();
        let variance = factor * (cfg.sigma_hat_sq - var * u);
        if sd == 0.0 {
            let (_, g) = kernel.delta_gamma(payoff, PricingInputs { spot, log_discount: 0.0, variance })?;
            return Ok((spot * spot * g).powi(2));
        }
        let mut breaks = vec![-12.0, 12.0];
        for k in &kinks {
            let z = ((k / spot).ln() + 0.5 * var * u) / sd;
            if z.abs() < 12.0 {
                breaks.push(z);
            }
        }
        breaks.sort_by(f64::total_cmp);
        let mut bad = false;
        let (m, _) = adaptive_gk(
            |z| {
                let s = spot * (sd * z - 0.5 * var * u).exp();
                let inputs = PricingInputs { spot: s, log_discount: 0.0, variance };
                match kernel.delta_gamma(payoff, inputs) {
                    Ok((_, g)) => [(s * s * g).powi(2) * norm_pdf(z)],
                    Err(_) => {
                        bad = true;
                        [0.0]
                    }
                }
            },
            &breaks,
            1e-11,
            20_000,
        )?;
        if bad {
            return Err(Error::NumericFailure("expected Q integrand could not be evaluated".into()));
        }
        Ok(m[0])
    };
    let mut failure = None;
    let (v, _) = adaptive_gk(
        |v| {
            let u = t * (1.0 - v * v);
            match inner(u) {
                Ok(x) => [2.0 * t * v * x],
                Err(e) => {
                    failure.get_or_insert(e);
                    [0.0]
                }
            }
        },
        &[0.0, 1.0],
        1e-10,
        4000,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(q_prefactor(cfg.alpha, payoff.convexity()) * var * v[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{simulate_path, ModelSpec};

    #[test]
    fn published_two_digit_coefficients() {
        let x1 = 0.20 / 0.15;
        let x2 = 0.25 / 0.15;
        assert!((beta(x1) - 2.32).abs() < 5e-3);
        assert!((beta_hat(x1) - 2.25).abs() < 5e-3);
        assert!((beta(x2) - 3.08).abs() < 5e-3);
        assert!((beta_hat(x2) - 2.79).abs() < 5e-3);
        assert!((alpha_from_kappa0(0.20, 0.15) - 1.67).abs() < 5e-3);
    }

    #[test]
    fn frozen_coefficients() {
        // high-precision references
        let x1 = 4.0 / 3.0;
        let x2 = 5.0 / 3.0;
        assert!((beta(x1) - 2.316_115).abs() < 1e-6);
        assert!((beta_hat(x1) - 2.246_145).abs() < 1e-6);
        assert!((beta(x2) - 3.082_077).abs() < 1e-6);
        assert!((beta_hat(x2) - 2.786_458).abs() < 1e-6);
        assert!((alpha_from_kappa0(0.25, 0.15) - 2.088_857).abs() < 1e-6);
        assert!((alpha_from_kappa0(0.3, 0.3) - 1.253_314_1).abs() < 1e-7);
        assert!((q_prefactor(2.0, Convexity::Convex) - 8.0 / 3.0).abs() < 1e-15);
        assert!((q_prefactor(4.0, Convexity::Concave) - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn beta_hat_is_the_hitting_time_prefactor() {
        for k in 1..=400 {
            let x = 0.01 * k as f64;
            let alpha = x * (PI / 2.0).sqrt();
            assert!((beta_hat(x) - q_prefactor(alpha, Convexity::Convex)).abs() < 1e-12);
        }
    }

    #[test]
    fn leland_is_worse_once_alpha_reaches_two() {
        let x_min = 2.0 / (PI / 2.0).sqrt();
        for k in 0..=2000 {
            let x = x_min + 0.005 * k as f64;
            assert!(beta(x) > beta_hat(x));
        }
    }

    #[test]
    fn expected_gamma_energy_matches_independent_quadrature() {
        // scipy nested quad of σ²∫₀¹ E[S̃⁴Γ̌²] du, σ = 0.2, κ₀ = 0.15
        let call = Payoff::call(100.0).unwrap();
        let alpha = alpha_from_kappa0(0.2, 0.15);
        let cfg = StrategyConfig::hitting_time(0.04, alpha, 0.01);
        let q = expected_q_black_scholes(100.0, 0.2, &call, &cfg, 1.0).unwrap();
        let j = q / q_prefactor(alpha, Convexity::Convex);
        assert!((j / 1_480.027_270_602_452 - 1.0).abs() < 1e-6, "{j}");
    }

    fn path(steps: usize, seed: u64) -> PathGrid {
        let m = ModelSpec::black_scholes(100.0, 0.2, 0.0, 1.0).unwrap();
        simulate_path(&m, 0.5, steps, seed).unwrap()
    }

    #[test]
    fn q_is_monotone_additive_and_kappa_free() {
        let call = Payoff::call(100.0).unwrap();
        let p = path(1000, 1);
        let a = limit_q(&p, &call, &StrategyConfig::hitting_time(0.04, 2.0, 0.01)).unwrap();
        let b = limit_q(&p, &call, &StrategyConfig::hitting_time(0.04, 2.0, 0.03)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], 0.0);
        assert!(a.windows(2).all(|w| w[1] >= w[0]));
        let head = limit_q(&p.truncated(401), &call, &StrategyConfig::hitting_time(0.04, 2.0, 0.01)).unwrap();
        assert_eq!(head[..], a[..401]);
    }

    #[test]
    fn q_is_undefined_past_the_budget() {
        let call = Payoff::call(100.0).unwrap();
        let p = path(100, 1);
        let r = limit_q(&p, &call, &StrategyConfig::hitting_time(0.015, 2.0, 0.01));
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn monte_carlo_mean_of_q_matches_oracle() {
        let call = Payoff::call(100.0).unwrap();
        let cfg = StrategyConfig::hitting_time(0.04, 2.0, 0.01);
        let oracle = expected_q_black_scholes(100.0, 0.2, &call, &cfg, 0.5).unwrap();
        let n = 2000;
        let qs: Vec<f64> = (0..n)
            .map(|s| *limit_q(&path(500, s), &call, &cfg).unwrap().last().unwrap())
            .collect();
        let mean = qs.iter().sum::<f64>() / n as f64;
        let sd = (qs.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let se = sd / (n as f64).sqrt();
        assert!((mean - oracle).abs() < 4.0 * se, "{mean} vs {oracle} (se {se})");
    }
}
