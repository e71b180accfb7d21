//! The pricing function
//!
//! ```text
//! P(S, R, Σ) = e^{-R} ∫ f(S·exp(R - Σ/2 + √Σ z)) φ(z) dz
//! ```
//!
//! and its partial derivatives. `P(S, rT, σ²T)` is the Black-Scholes price,
//! `R` is the cumulative log-discount `-log S⁰` and `Σ` the variance budget
//! still to be spent.
//!
//! Calls and puts use closed forms. Everything else goes through quadrature:
//! Gauss-Hermite for smooth payoffs, adaptive Gauss-Kronrod split at the
//! image of each kink for piecewise-linear ones. Delta and gamma come from
//! differentiating the Gaussian weight (likelihood-ratio factors `z/√Σ`,
//! `(z²-1)/Σ`), while `∂P/∂Σ` and `∂P/∂R` differentiate the payoff along the
//! path, so the first two PDE identities compare two independent routes.

pub mod closed_form;
pub mod quadrature;

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::payoff::{Payoff, PayoffKind};
use quadrature::{adaptive_gk, GaussHermite};

/// The `(S, R, Σ)` triple at which `P` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PricingInputs {
    pub spot: f64,
    pub log_discount: f64,
    pub variance: f64,
}

impl PricingInputs {
    pub fn new(spot: f64, log_discount: f64, variance: f64) -> Result<Self> {
        if !(spot.is_finite() && spot > 0.0) {
            return Err(invalid(format!("spot must be positive, got {spot}")));
        }
        if !log_discount.is_finite() {
            return Err(invalid("log-discount must be finite"));
        }
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(invalid(format!("variance must be non-negative, got {variance}")));
        }
        Ok(Self {
            spot,
            log_discount,
            variance,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreekSet {
    pub price: f64,
    /// `∂P/∂S`
    pub delta: f64,
    /// `∂²P/∂S²`
    pub gamma: f64,
    /// `∂P/∂Σ`
    pub d_sigma: f64,
    /// `∂P/∂R`
    pub d_r: f64,
}

/// Residuals of the four identities satisfied by `P`:
///
/// ```text
/// r1 = ∂P/∂Σ    - ½S²∂²P/∂S²
/// r2 = ∂P/∂R    - (S∂P/∂S - P)
/// r3 = ∂²P/∂R∂S - S∂²P/∂S²
/// r4 = ∂²P/∂R²  - (S²∂²P/∂S² - ∂P/∂R)
/// ```
///
/// The mixed and second `R` derivatives are Richardson-extrapolated central
/// differences of the greeks with steps [`PDE_FD_STEP`] and half of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeResiduals {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
}

impl PdeResiduals {
    pub fn max_abs(&self) -> f64 {
        self.r1.abs().max(self.r2.abs()).max(self.r3.abs()).max(self.r4.abs())
    }
}

pub const PDE_FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Closed forms where available, quadrature otherwise.
    #[default]
    Auto,
    /// Quadrature for every payoff, including calls and puts.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss-Hermite order for smooth payoffs.
    pub hermite_order: usize,
    /// Relative tolerance against `∫|integrand|`.
    pub rel_tol: f64,
    /// Panel budget of the adaptive route.
    pub max_panels: usize,
    /// Half-width of the truncated `z` range, in standard deviations.
    pub tail_cutoff: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            hermite_order: 200,
            rel_tol: 1e-13,
            max_panels: 20_000,
            tail_cutoff: 13.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PricingKernel {
    config: QuadratureConfig,
    method: Method,
    hermite: GaussHermite,
    hermite_check: GaussHermite,
}

impl PricingKernel {
    pub fn new(config: QuadratureConfig, method: Method) -> Result<Self> {
        if config.hermite_order < 8 {
            return Err(invalid("Gauss-Hermite order must be at least 8"));
        }
        if !(config.rel_tol > 0.0) || config.max_panels < 8 || !(config.tail_cutoff > 0.0) {
            return Err(invalid("quadrature tolerances must be positive"));
        }
        Ok(Self {
            hermite: GaussHermite::new(config.hermite_order)?,
            hermite_check: GaussHermite::new(config.hermite_order * 3 / 4)?,
            config,
            method,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn price(&self, payoff: &Payoff, inputs: PricingInputs) -> Result<f64> {
        let PricingInputs {
            spot: s,
            log_discount: r,
            variance: sigma,
        } = inputs;
        if sigma == 0.0 {
            return Ok((-r).exp() * payoff.eval_unchecked(s * r.exp()));
        }
        Ok(self.greeks(payoff, inputs)?.price)
    }

    pub fn greeks(&self, payoff: &Payoff, inputs: PricingInputs) -> Result<GreekSet> {
        let PricingInputs {
            spot: s,
            log_discount: r,
            variance: sigma,
        } = inputs;
        if sigma <= 0.0 {
            return Err(Error::Domain("greeks need a strictly positive variance budget".into()));
        }
        match (self.method, payoff.kind()) {
            (Method::Auto, PayoffKind::Call { strike }) => Ok(closed_form::call(s, *strike, r, sigma)),
            (Method::Auto, PayoffKind::Put { strike }) => Ok(closed_form::put(s, *strike, r, sigma)),
            _ => self.quadrature_greeks(payoff, inputs),
        }
    }

    /// `(delta, gamma)` at `(S, R, Σ)`; closed form for vanillas under
    /// [`Method::Auto`].
    #[inline]
    pub fn delta_gamma(&self, payoff: &Payoff, inputs: PricingInputs) -> Result<(f64, f64)> {
        if inputs.variance > 0.0 && self.method == Method::Auto {
            match payoff.kind() {
                PayoffKind::Call { strike } => {
                    return Ok(closed_form::delta_gamma(true, inputs.spot, *strike, inputs.log_discount, inputs.variance))
                }
                PayoffKind::Put { strike } => {
                    return Ok(closed_form::delta_gamma(false, inputs.spot, *strike, inputs.log_discount, inputs.variance))
                }
                _ => {}
            }
        }
        let g = self.greeks(payoff, inputs)?;
        Ok((g.delta, g.gamma))
    }

    pub fn pde_residuals(&self, payoff: &Payoff, inputs: PricingInputs) -> Result<PdeResiduals> {
        let g = self.greeks(payoff, inputs)?;
        let central = |h: f64| -> Result<(f64, f64)> {
            let up = self.greeks(payoff, PricingInputs { log_discount: inputs.log_discount + h, ..inputs })?;
            let dn = self.greeks(payoff, PricingInputs { log_discount: inputs.log_discount - h, ..inputs })?;
            Ok(((up.delta - dn.delta) / (2.0 * h), (up.d_r - dn.d_r) / (2.0 * h)))
        };
        let (a1, b1) = central(PDE_FD_STEP)?;
        let (a2, b2) = central(0.5 * PDE_FD_STEP)?;
        let s = inputs.spot;
        let d2p_drds = (4.0 * a2 - a1) / 3.0;
        let d2p_dr2 = (4.0 * b2 - b1) / 3.0;
        Ok(PdeResiduals {
            r1: g.d_sigma - 0.5 * s * s * g.gamma,
            r2: g.d_r - (s * g.delta - g.price),
            r3: d2p_drds - s * g.gamma,
            r4: d2p_dr2 - (s * s * g.gamma - g.d_r),
        })
    }

    fn quadrature_greeks(&self, payoff: &Payoff, inputs: PricingInputs) -> Result<GreekSet> {
        let PricingInputs {
            spot: s,
            log_discount: r,
            variance: sigma,
        } = inputs;
        let sd = sigma.sqrt();
        let drift = r - 0.5 * sigma;
        // moments of f(X)·w(z) for the weights listed in `combine`
        let integrand = |z: f64| -> [f64; 5] {
            let x = s * (drift + sd * z).exp();
            let f = payoff.eval_unchecked(x);
            let fx = payoff.one_sided_unchecked(x).1 * x;
            [f, f * z, f * ((z * z - 1.0) - sd * z), fx, fx * z]
        };
        let moments = if payoff.kinks().is_empty() {
            self.hermite_moments(integrand)?
        } else {
            let breaks = self.breaks(payoff, s, r, sigma);
            let weighted = |z: f64| {
                let w = crate::math::norm_pdf(z);
                integrand(z).map(|v| v * w)
            };
            adaptive_gk(weighted, &breaks, self.config.rel_tol, self.config.max_panels)?.0
        };
        let disc = (-r).exp();
        let [m_f, m_z, m_g, m_fx, m_fxz] = moments.map(|m| disc * m);
        Ok(GreekSet {
            price: m_f,
            delta: m_z / (s * sd),
            gamma: m_g / (s * s * sigma),
            d_sigma: 0.5 * (m_fxz / sd - m_fx),
            d_r: m_fx - m_f,
        })
    }

    fn hermite_moments(&self, integrand: impl Fn(f64) -> [f64; 5]) -> Result<[f64; 5]> {
        let (fine, fine_abs) = self.hermite.expect(&integrand);
        let (coarse, _) = self.hermite_check.expect(&integrand);
        // the coarse rule is only a convergence witness
        let tol = (self.config.rel_tol * 1e4).max(1e-12);
        for c in 0..5 {
            if (fine[c] - coarse[c]).abs() > tol * fine_abs[c] + f64::MIN_POSITIVE {
                return Err(Error::NumericFailure(format!(
                    "Gauss-Hermite order {} not converged (moment {c}: {} vs {})",
                    self.hermite.order(),
                    fine[c],
                    coarse[c]
                )));
            }
        }
        Ok(fine)
    }

    /// Break points in `z`: the truncated range plus the image of each kink.
    fn breaks(&self, payoff: &Payoff, s: f64, r: f64, sigma: f64) -> Vec<f64> {
        let sd = sigma.sqrt();
        let reach = self.config.tail_cutoff + payoff.growth_exponent() * sd;
        let (lo, hi) = (-reach, reach);
        let mut breaks = vec![lo];
        for k in payoff.kinks() {
            let z = ((k / s).ln() - r + 0.5 * sigma) / sd;
            if z > lo && z < hi {
                breaks.push(z);
            }
        }
        breaks.push(hi);
        breaks.sort_by(f64::total_cmp);
        breaks
    }
}

/// Process-wide kernel with default quadrature settings and [`Method::Auto`].
pub fn default_kernel() -> &'static PricingKernel {
    static KERNEL: OnceLock<PricingKernel> = OnceLock::new();
    KERNEL.get_or_init(|| PricingKernel::new(QuadratureConfig::default(), Method::Auto).expect("default quadrature is valid"))
}

pub fn price(payoff: &Payoff, inputs: PricingInputs) -> Result<f64> {
    default_kernel().price(payoff, inputs)
}

pub fn greeks(payoff: &Payoff, inputs: PricingInputs) -> Result<GreekSet> {
    default_kernel().greeks(payoff, inputs)
}

pub fn pde_residuals(payoff: &Payoff, inputs: PricingInputs) -> Result<PdeResiduals> {
    default_kernel().pde_residuals(payoff, inputs)
}
