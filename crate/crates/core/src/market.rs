//! Joint paths of the asset `S¹` and the zero-coupon bond `S⁰` on a time
//! grid, together with the model-known quadratic variation of `log S̃`,
//! `S̃ = S¹/S⁰`.
//!
//! The asset is simulated under a measure where `S̃` is a martingale. Each
//! path draws from its own ChaCha streams keyed by a per-path seed, so a
//! path is the same whichever thread produces it and in whatever order.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Deterministic variance curve `σ²(t)` of a time-dependent volatility model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "curve", rename_all = "snake_case", deny_unknown_fields)]
pub enum VolCurve {
    /// Volatility knots `(t, σ)` interpolated linearly, flat outside.
    Knots { knots: Vec<(f64, f64)> },
    /// `σ²(t) = θ + (v₀ - θ)e^{-kt}`, the solution of the mean-reverting
    /// variance ODE.
    MeanReverting { v0: f64, speed: f64, long_run_var: f64 },
}

impl VolCurve {
    pub fn variance(&self, t: f64) -> f64 {
        match self {
            VolCurve::Knots { knots } => {
                let k = knots.partition_point(|&(x, _)| x <= t);
                let sigma = if k == 0 {
                    knots[0].1
                } else if k == knots.len() {
                    knots[k - 1].1
                } else {
                    let (t0, s0) = knots[k - 1];
                    let (t1, s1) = knots[k];
                    s0 + (s1 - s0) * (t - t0) / (t1 - t0)
                };
                sigma * sigma
            }
            VolCurve::MeanReverting {
                v0,
                speed,
                long_run_var,
            } => long_run_var + (v0 - long_run_var) * (-speed * t).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            VolCurve::Knots { knots } => {
                if knots.is_empty() {
                    return Err(invalid("volatility curve needs at least one knot"));
                }
                if knots.iter().any(|&(t, s)| !(t.is_finite() && s.is_finite() && s > 0.0)) {
                    return Err(invalid("volatility knots must be finite with sigma > 0"));
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(invalid("volatility knot times must be strictly increasing"));
                }
            }
            VolCurve::MeanReverting {
                v0,
                speed,
                long_run_var,
            } => {
                if !(*v0 > 0.0 && *long_run_var > 0.0 && *speed >= 0.0 && speed.is_finite()) {
                    return Err(invalid("mean-reverting variance needs v0 > 0, long_run_var > 0, speed ≥ 0"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dynamics {
    BlackScholes {
        sigma: f64,
    },
    TimeDependentVol {
        vol: VolCurve,
    },
    /// Square-root stochastic variance; the variance shock is
    /// `ρ·dW¹ + √(1-ρ²)·dW²` where `dW¹` drives the asset.
    StochVol {
        v0: f64,
        mean_reversion: f64,
        vol_of_vol: f64,
        long_run_var: f64,
        correlation: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    BlackScholes,
    TimeDependentVol,
    StochVol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// `S¹₀`
    pub spot: f64,
    /// Continuously compounded short rate of the deterministic bond.
    pub rate: f64,
    /// Bond maturity `T`; `S⁰_T = 1`.
    pub maturity: f64,
    pub dynamics: Dynamics,
}

impl ModelSpec {
    pub fn black_scholes(spot: f64, sigma: f64, rate: f64, maturity: f64) -> Result<Self> {
        let m = Self {
            spot,
            rate,
            maturity,
            dynamics: Dynamics::BlackScholes { sigma },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn kind(&self) -> ModelKind {
        match self.dynamics {
            Dynamics::BlackScholes { .. } => ModelKind::BlackScholes,
            Dynamics::TimeDependentVol { .. } => ModelKind::TimeDependentVol,
            Dynamics::StochVol { .. } => ModelKind::StochVol,
        }
    }

    /// Black-Scholes volatility, if the model has one.
    pub fn constant_sigma(&self) -> Option<f64> {
        match self.dynamics {
            Dynamics::BlackScholes { sigma } => Some(sigma),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.spot.is_finite() && self.spot > 0.0) {
            errs.push(format!("model.spot must be positive, got {}", self.spot));
        }
        if !self.rate.is_finite() {
            errs.push("model.rate must be finite".to_string());
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            errs.push(format!("model.maturity must be positive, got {}", self.maturity));
        }
        match &self.dynamics {
            Dynamics::BlackScholes { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    errs.push(format!("model.sigma must be positive, got {sigma}"));
                }
            }
            Dynamics::TimeDependentVol { vol } => {
                if let Err(e) = vol.validate() {
                    errs.push(e.to_string());
                }
            }
            Dynamics::StochVol {
                v0,
                mean_reversion,
                vol_of_vol,
                long_run_var,
                correlation,
            } => {
                if !(*v0 > 0.0 && *long_run_var > 0.0) {
                    errs.push("stochastic variance needs v0 > 0 and long_run_var > 0".to_string());
                }
                if !(*mean_reversion >= 0.0 && *vol_of_vol >= 0.0) {
                    errs.push("mean_reversion and vol_of_vol must be non-negative".to_string());
                }
                if !(-1.0..=1.0).contains(correlation) {
                    errs.push(format!("correlation must lie in [-1, 1], got {correlation}"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// A simulated path on `0 = t₀ < … < t_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    pub times: Vec<f64>,
    pub s1: Vec<f64>,
    pub s0: Vec<f64>,
    /// `s1[i] / s0[i]`
    pub s_tilde: Vec<f64>,
    /// `⟨log S̃⟩` at each grid time, integrated from the model variance.
    pub qv: Vec<f64>,
    pub seed: u64,
    pub kind: ModelKind,
    pub maturity: f64,
}

impl PathGrid {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    /// `R_t = -log S⁰_t`
    #[inline]
    pub fn log_discount(&self, i: usize) -> f64 {
        -self.s0[i].ln()
    }

    /// Index of the grid time closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&x| x < t);
        if k == 0 {
            0
        } else if k == self.times.len() {
            k - 1
        } else if (self.times[k] - t).abs() < (t - self.times[k - 1]).abs() {
            k
        } else {
            k - 1
        }
    }

    /// The path restricted to its first `len` grid points.
    pub fn truncated(&self, len: usize) -> PathGrid {
        let len = len.clamp(1, self.len());
        PathGrid {
            times: self.times[..len].to_vec(),
            s1: self.s1[..len].to_vec(),
            s0: self.s0[..len].to_vec(),
            s_tilde: self.s_tilde[..len].to_vec(),
            qv: self.qv[..len].to_vec(),
            seed: self.seed,
            kind: self.kind,
            maturity: self.maturity,
        }
    }

    /// Realized quadratic variation `Σ (Δ log S̃)²`.
    pub fn realized_qv(&self) -> f64 {
        self.s_tilde
            .windows(2)
            .map(|w| {
                let d = (w[1] / w[0]).ln();
                d * d
            })
            .sum()
    }

    /// Debug dump with columns `times,s1,s0,qv`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["times", "s1", "s0", "qv"])?;
        for i in 0..self.len() {
            w.write_record([
                format!("{:.16e}", self.times[i]),
                format!("{:.16e}", self.s1[i]),
                format!("{:.16e}", self.s0[i]),
                format!("{:.16e}", self.qv[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-path seed derived from the master seed and the path index
/// (SplitMix64 finalizer over both words).
pub fn path_seed(master_seed: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(master_seed.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const PRICE_STREAM: u64 = 0;
const VARIANCE_STREAM: u64 = 1;
const BRIDGE_STREAM: u64 = 2;

/// Simulates `steps` equal steps on `[0, horizon]`.
///
/// Black-Scholes paths are stepped exactly in log space. The other models
/// freeze the variance over each step (`σ²(t_i)` or `v_i⁺`), and `qv`
/// accumulates exactly that variance, so it is the quadratic variation of
/// the simulated process. The stochastic variance uses full truncation with
/// the mean-reversion drift integrated exactly over the step.
pub fn simulate_path(model: &ModelSpec, horizon: f64, steps: usize, seed: u64) -> Result<PathGrid> {
    model.validate()?;
    if steps == 0 {
        return Err(invalid("steps must be at least 1"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let n = steps + 1;
    let dt = horizon / steps as f64;
    let sqrt_dt = dt.sqrt();
    let times: Vec<f64> = (0..n).map(|i| horizon * i as f64 / steps as f64).collect();
    let r = model.rate;
    let s0: Vec<f64> = times.iter().map(|t| (-r * (model.maturity - t)).exp()).collect();
    let mut s1 = Vec::with_capacity(n);
    let mut qv = Vec::with_capacity(n);
    let mut price_rng = stream(seed, PRICE_STREAM);
    let mut log_s = model.spot.ln();
    s1.push(model.spot);
    qv.push(0.0);
    match &model.dynamics {
        Dynamics::BlackScholes { sigma } => {
            let var = sigma * sigma;
            let drift = (r - 0.5 * var) * dt;
            let vol = sigma * sqrt_dt;
            for t in &times[1..] {
                let z: f64 = StandardNormal.sample(&mut price_rng);
                log_s += drift + vol * z;
                s1.push(log_s.exp());
                qv.push(var * t);
            }
        }
        Dynamics::TimeDependentVol { vol } => {
            let mut acc = 0.0;
            for t in &times[..n - 1] {
                let var = vol.variance(*t);
                let z: f64 = StandardNormal.sample(&mut price_rng);
                log_s += (r - 0.5 * var) * dt + (var * dt).sqrt() * z;
                acc += var * dt;
                s1.push(log_s.exp());
                qv.push(acc);
            }
        }
        Dynamics::StochVol {
            v0,
            mean_reversion,
            vol_of_vol,
            long_run_var,
            correlation,
        } => {
            let mut var_rng = stream(seed, VARIANCE_STREAM);
            let decay = (-mean_reversion * dt).exp();
            let rho_perp = (1.0 - correlation * correlation).sqrt();
            let mut v = *v0;
            let mut acc = 0.0;
            for _ in 1..n {
                let vp = v.max(0.0);
                let z1: f64 = StandardNormal.sample(&mut price_rng);
                let z2: f64 = StandardNormal.sample(&mut var_rng);
                log_s += (r - 0.5 * vp) * dt + (vp * dt).sqrt() * z1;
                acc += vp * dt;
                s1.push(log_s.exp());
                qv.push(acc);
                v = long_run_var + (vp - long_run_var) * decay + vol_of_vol * (vp * dt).sqrt() * (correlation * z1 + rho_perp * z2);
            }
        }
    }
    let s_tilde = s1.iter().zip(&s0).map(|(a, b)| a / b).collect();
    Ok(PathGrid {
        times,
        s1,
        s0,
        s_tilde,
        qv,
        seed,
        kind: model.kind(),
        maturity: model.maturity,
    })
}

/// Inserts `factor - 1` Brownian-bridge points into every interval.
///
/// Between grid points `log S¹` is a Brownian motion with drift and the
/// constant variance rate read off the `qv` increment, so the bridge law is
/// exact for deterministic-volatility models. Original points are copied
/// unchanged.
pub fn refine_grid(path: &PathGrid, factor: usize, seed: u64) -> Result<PathGrid> {
    if factor < 2 {
        return Err(invalid("refinement factor must be at least 2"));
    }
    if path.kind == ModelKind::StochVol {
        return Err(Error::UnsupportedModel(
            "bridge refinement needs a deterministic variance (black_scholes or time_dependent_vol)".into(),
        ));
    }
    let m = path.steps();
    let cap = m * factor + 1;
    let mut out = PathGrid {
        times: Vec::with_capacity(cap),
        s1: Vec::with_capacity(cap),
        s0: Vec::with_capacity(cap),
        s_tilde: Vec::with_capacity(cap),
        qv: Vec::with_capacity(cap),
        seed: path.seed,
        kind: path.kind,
        maturity: path.maturity,
    };
    let mut rng = stream(seed, BRIDGE_STREAM);
    let push_original = |out: &mut PathGrid, i: usize| {
        out.times.push(path.times[i]);
        out.s1.push(path.s1[i]);
        out.s0.push(path.s0[i]);
        out.s_tilde.push(path.s_tilde[i]);
        out.qv.push(path.qv[i]);
    };
    push_original(&mut out, 0);
    for i in 0..m {
        let (ta, tb) = (path.times[i], path.times[i + 1]);
        let (xb, lb0) = (path.s1[i + 1].ln(), path.s0[i + 1].ln());
        let (xa, la0) = (path.s1[i].ln(), path.s0[i].ln());
        let rate = (path.qv[i + 1] - path.qv[i]) / (tb - ta);
        let h = (tb - ta) / factor as f64;
        let mut x = xa;
        let mut t_prev = ta;
        for k in 1..factor {
            let t = ta + h * k as f64;
            let remaining = tb - t_prev;
            let mean = x + (xb - x) * (t - t_prev) / remaining;
            let var = rate * (t - t_prev) * (tb - t) / remaining;
            let z: f64 = StandardNormal.sample(&mut rng);
            x = mean + var.sqrt() * z;
            t_prev = t;
            let s1 = x.exp();
            let s0 = (la0 + (lb0 - la0) * (t - ta) / (tb - ta)).exp();
            out.times.push(t);
            out.s1.push(s1);
            out.s0.push(s0);
            out.s_tilde.push(s1 / s0);
            out.qv.push(path.qv[i] + rate * (t - ta));
        }
        push_original(&mut out, i + 1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(sigma: f64, r: f64) -> ModelSpec {
        ModelSpec::black_scholes(100.0, sigma, r, 1.0).unwrap()
    }

    #[test]
    fn constant_variance_integrates_exactly() {
        let p = simulate_path(&bs(0.2, 0.0), 1.0, 250, 7).unwrap();
        assert_eq!(p.len(), 251);
        assert_eq!(p.qv[0], 0.0);
        assert!((p.qv[250] - 0.04).abs() < 1e-15);
        assert!(p.qv.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn deterministic_bond() {
        let p = simulate_path(&bs(0.2, 0.05), 1.0, 100, 1).unwrap();
        assert_eq!(*p.s0.last().unwrap(), 1.0);
        for (t, b) in p.times.iter().zip(&p.s0) {
            assert!((b - (-0.05 * (1.0 - t)).exp()).abs() < 1e-15);
        }
        for i in 0..p.len() {
            assert_eq!(p.s_tilde[i], p.s1[i] / p.s0[i]);
            assert!(p.s1[i] > 0.0 && p.s0[i] > 0.0);
        }
    }

    #[test]
    fn reproducible_per_seed() {
        let m = bs(0.3, 0.01);
        assert_eq!(simulate_path(&m, 1.0, 64, 42).unwrap(), simulate_path(&m, 1.0, 64, 42).unwrap());
        assert_ne!(simulate_path(&m, 1.0, 64, 42).unwrap().s1, simulate_path(&m, 1.0, 64, 43).unwrap().s1);
        assert_ne!(path_seed(1, 0), path_seed(1, 1));
        assert_ne!(path_seed(1, 0), path_seed(2, 0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(simulate_path(&bs(0.2, 0.0), 1.0, 0, 1).is_err());
        assert!(simulate_path(&bs(0.2, 0.0), 0.0, 10, 1).is_err());
        assert!(ModelSpec::black_scholes(100.0, -0.2, 0.0, 1.0).is_err());
        let m = ModelSpec {
            spot: 100.0,
            rate: 0.0,
            maturity: 1.0,
            dynamics: Dynamics::StochVol {
                v0: 0.04,
                mean_reversion: 1.0,
                vol_of_vol: 0.3,
                long_run_var: 0.04,
                correlation: 1.5,
            },
        };
        assert!(matches!(m.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn stoch_vol_without_vol_of_vol_matches_deterministic_curve() {
        let (v0, k, theta) = (0.09, 2.0, 0.04);
        for rho in [0.0, -0.7] {
            let sv = ModelSpec {
                spot: 100.0,
                rate: 0.03,
                maturity: 1.0,
                dynamics: Dynamics::StochVol {
                    v0,
                    mean_reversion: k,
                    vol_of_vol: 0.0,
                    long_run_var: theta,
                    correlation: rho,
                },
            };
            let td = ModelSpec {
                dynamics: Dynamics::TimeDependentVol {
                    vol: VolCurve::MeanReverting {
                        v0,
                        speed: k,
                        long_run_var: theta,
                    },
                },
                ..sv.clone()
            };
            let a = simulate_path(&sv, 1.0, 500, 99).unwrap();
            let b = simulate_path(&td, 1.0, 500, 99).unwrap();
            for i in 0..a.len() {
                assert!((a.s1[i] - b.s1[i]).abs() <= 1e-10 * b.s1[i]);
                assert!((a.qv[i] - b.qv[i]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn stoch_vol_keeps_paths_positive() {
        let m = ModelSpec {
            spot: 100.0,
            rate: 0.0,
            maturity: 1.0,
            dynamics: Dynamics::StochVol {
                v0: 0.04,
                mean_reversion: 0.5,
                vol_of_vol: 1.5,
                long_run_var: 0.04,
                correlation: -0.9,
            },
        };
        for seed in 0..20 {
            let p = simulate_path(&m, 1.0, 200, seed).unwrap();
            assert!(p.s1.iter().all(|s| *s > 0.0 && s.is_finite()));
            assert!(p.qv.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn knot_curve_interpolates() {
        let c = VolCurve::Knots {
            knots: vec![(0.0, 0.1), (1.0, 0.3)],
        };
        assert!((c.variance(0.5) - 0.04).abs() < 1e-15);
        assert!((c.variance(2.0) - 0.09).abs() < 1e-15);
        assert!((c.variance(-1.0) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn refinement_pins_original_points() {
        let p = simulate_path(&bs(0.2, 0.04), 1.0, 50, 3).unwrap();
        let f = refine_grid(&p, 4, 11).unwrap();
        assert_eq!(f.steps(), 200);
        for i in 0..p.len() {
            let j = 4 * i;
            assert_eq!(f.times[j], p.times[i]);
            assert_eq!(f.s1[j], p.s1[i]);
            assert_eq!(f.s0[j], p.s0[i]);
            assert_eq!(f.qv[j], p.qv[i]);
        }
        assert!(f.times.windows(2).all(|w| w[1] > w[0]));
        assert!(f.qv.windows(2).all(|w| w[1] >= w[0]));
        assert!(refine_grid(&p, 1, 0).is_err());
    }

    #[test]
    fn refinement_rejects_stochastic_variance() {
        let m = ModelSpec {
            spot: 100.0,
            rate: 0.0,
            maturity: 1.0,
            dynamics: Dynamics::StochVol {
                v0: 0.04,
                mean_reversion: 1.0,
                vol_of_vol: 0.2,
                long_run_var: 0.04,
                correlation: 0.0,
            },
        };
        let p = simulate_path(&m, 1.0, 10, 0).unwrap();
        assert!(matches!(refine_grid(&p, 2, 0), Err(Error::UnsupportedModel(_))));
    }

    #[test]
    fn refined_bridge_increments_have_model_variance() {
        // the bridge must not change the variance of one-step log increments
        let m = bs(0.25, 0.0);
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for seed in 0..400 {
            let p = simulate_path(&m, 1.0, 4, seed).unwrap();
            let f = refine_grid(&p, 8, seed + 1000).unwrap();
            for w in f.s_tilde.windows(2) {
                let d = (w[1] / w[0]).ln();
                sum_sq += d * d;
                count += 1;
            }
        }
        let per_step = 0.0625 / 32.0;
        let est = sum_sq / count as f64;
        assert!((est / per_step - 1.0).abs() < 0.05, "{est} vs {per_step}");
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let p = simulate_path(&bs(0.2, 0.0), 1.0, 3, 0).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("times,s1,s0,qv\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
