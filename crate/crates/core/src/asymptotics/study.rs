//! Monte Carlo studies of the hedging error across a ladder of cost levels.
//!
//! Every path is generated from `path_seed(master_seed, i)`, and the same
//! path is hedged at every level of the ladder. Work is spread over the
//! rayon pool and gathered in path order, so reports do not depend on the
//! number of threads.

use rayon::prelude::*;
use serde::Serialize;

use super::limits::{alpha_from_kappa0, beta, beta_hat, count_limit, limit_q_with, q_prefactor};
use super::stats::{self, Estimate};
use crate::error::Result;
use crate::hedge::{leland_variance, run_hitting_time_with, run_leland_with, Recording, StrategyConfig, StrategyKind};
use crate::market::{path_seed, refine_grid, simulate_path, ModelSpec, PathGrid};
use crate::payoff::Payoff;
use crate::pricing::default_kernel;

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSpec {
    pub model: ModelSpec,
    pub payoff: Payoff,
    /// Base strategy; `kappa` is replaced by each ladder level.
    pub strategy: StrategyConfig,
    pub kappas: Vec<f64>,
    pub paths: usize,
    /// Grid density; the grid ends at the last checkpoint.
    pub steps_per_unit_time: usize,
    /// Optional Brownian-bridge refinement factor applied to each path.
    pub refine: Option<usize>,
    pub checkpoints: Vec<f64>,
    pub master_seed: u64,
}

impl ConvergenceSpec {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if let Err(e) = self.model.validate() {
            errs.push(e.to_string());
        }
        if self.kappas.is_empty() {
            errs.push("kappa ladder is empty".to_string());
        }
        if self.kappas.windows(2).any(|w| w[1] >= w[0]) {
            errs.push("kappa ladder must be strictly decreasing".to_string());
        }
        for &k in &self.kappas {
            let cfg = StrategyConfig { kappa: k, ..self.strategy.clone() };
            errs.extend(cfg.violations(&self.payoff));
        }
        if self.strategy.kind != StrategyKind::HittingTime {
            errs.push("convergence studies run the hitting_time strategy".to_string());
        }
        if self.paths == 0 {
            errs.push("paths must be at least 1".to_string());
        }
        if self.steps_per_unit_time == 0 {
            errs.push("steps_per_unit_time must be at least 1".to_string());
        }
        if self.checkpoints.is_empty() {
            errs.push("at least one checkpoint is needed".to_string());
        }
        if self.checkpoints.iter().any(|&t| !(t > 0.0 && t <= self.model.maturity)) {
            errs.push("checkpoints must lie in (0, maturity]".to_string());
        }
        if self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            errs.push("checkpoints must be strictly increasing".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::Config(errs))
        }
    }

    fn horizon(&self) -> f64 {
        *self.checkpoints.last().expect("validated")
    }

    pub fn grid_steps(&self) -> usize {
        ((self.horizon() * self.steps_per_unit_time as f64).round() as usize).max(1)
    }
}

/// Raw per-path statistics of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub index: usize,
    pub seed: u64,
    /// Per checkpoint.
    pub s_tilde: Vec<f64>,
    pub qv: Vec<f64>,
    pub q: Vec<f64>,
    /// `[kappa][checkpoint]`
    pub z: Vec<Vec<f64>>,
    pub n_rebalances: Vec<Vec<usize>>,
    /// Per kappa.
    pub alarm: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub kappa: f64,
    pub time: f64,
    pub paths: usize,
    /// Fewer than two paths: dispersion statistics are undefined.
    pub degenerate: bool,
    pub mean_z: Estimate,
    pub var_z: f64,
    pub mean_q: Estimate,
    /// `var(Z_t)/mean(Q_t)` with a 95% chi-square interval.
    pub var_ratio: f64,
    pub var_ratio_interval: (f64, f64),
    /// `E[Z_t²]/E[Q_t]`
    pub mse_ratio: Estimate,
    /// Moments of `Z_t/√Q_t`.
    pub normalized_skewness: f64,
    pub normalized_excess_kurtosis: f64,
    pub ks_distance: f64,
    /// `corr(Z_t/√Q_t, S̃_t)`
    pub correlation_with_spot: f64,
    /// `κ²·N_t`
    pub kappa2_n: Estimate,
    pub kappa2_n_sd: f64,
    /// Mean of `⟨log S̃⟩_t/α²`.
    pub count_target: f64,
    pub alarms: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub paths: usize,
    pub grid_steps: usize,
    pub horizon: f64,
    pub master_seed: u64,
    pub q_prefactor: f64,
    pub cells: Vec<CellReport>,
    #[serde(skip)]
    pub records: Vec<PathRecord>,
}

impl ExperimentReport {
    pub fn cell(&self, kappa: f64, time: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.kappa == kappa && (c.time - time).abs() < 1e-12)
    }

    pub fn alarms(&self) -> usize {
        self.cells.iter().map(|c| c.alarms).max().unwrap_or(0)
    }
}

fn study_path(spec: &ConvergenceSpec, i: usize) -> Result<PathRecord> {
    let kernel = default_kernel();
    let seed = path_seed(spec.master_seed, i as u64);
    let mut path: PathGrid = simulate_path(&spec.model, spec.horizon(), spec.grid_steps(), seed)?;
    if let Some(f) = spec.refine {
        path = refine_grid(&path, f, seed)?;
    }
    let cps: Vec<usize> = spec.checkpoints.iter().map(|&t| path.index_of(t)).collect();
    let base = StrategyConfig { kappa: spec.kappas[0], ..spec.strategy.clone() };
    let q_path = limit_q_with(&path, &spec.payoff, &base, kernel)?;
    let mut z = Vec::with_capacity(spec.kappas.len());
    let mut n = Vec::with_capacity(spec.kappas.len());
    let mut alarm = Vec::with_capacity(spec.kappas.len());
    let rec = Recording::At(cps.clone());
    for &k in &spec.kappas {
        let cfg = StrategyConfig { kappa: k, ..spec.strategy.clone() };
        let out = run_hitting_time_with(&path, &spec.payoff, &cfg, kernel, &rec)?;
        z.push(cps.iter().map(|&c| out.z[out.slot(c).expect("recorded")]).collect());
        n.push(cps.iter().map(|&c| out.n_rebalances[out.slot(c).expect("recorded")]).collect());
        alarm.push(out.alarm.is_some());
    }
    Ok(PathRecord {
        index: i,
        seed,
        s_tilde: cps.iter().map(|&c| path.s_tilde[c]).collect(),
        qv: cps.iter().map(|&c| path.qv[c]).collect(),
        q: cps.iter().map(|&c| q_path[c]).collect(),
        z,
        n_rebalances: n,
        alarm,
    })
}

/// Hedges `paths` simulated paths at every `κ` of the ladder and reports the
/// statistics of `Z_t` against `Q_t` at each checkpoint.
pub fn convergence_study(spec: &ConvergenceSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let records: Vec<PathRecord> = (0..spec.paths)
        .into_par_iter()
        .map(|i| study_path(spec, i))
        .collect::<Result<_>>()?;
    let alpha = spec.strategy.alpha;
    let mut cells = Vec::new();
    for (ki, &kappa) in spec.kappas.iter().enumerate() {
        for (ci, &time) in spec.checkpoints.iter().enumerate() {
            let z: Vec<f64> = records.iter().map(|r| r.z[ki][ci]).collect();
            let q: Vec<f64> = records.iter().map(|r| r.q[ci]).collect();
            let s: Vec<f64> = records.iter().map(|r| r.s_tilde[ci]).collect();
            let z2: Vec<f64> = z.iter().map(|v| v * v).collect();
            let normalized: Vec<f64> = z.iter().zip(&q).map(|(z, q)| z / q.sqrt()).collect();
            let counts: Vec<f64> = records.iter().map(|r| kappa * kappa * r.n_rebalances[ki][ci] as f64).collect();
            let targets: Vec<f64> = records.iter().map(|r| count_limit(r.qv[ci], alpha)).collect();
            let var_z = stats::variance(&z);
            let mean_q = Estimate::of_mean(&q);
            let (lo, hi) = stats::variance_interval(var_z, z.len(), 0.95);
            cells.push(CellReport {
                kappa,
                time,
                paths: z.len(),
                degenerate: z.len() < 2,
                mean_z: Estimate::of_mean(&z),
                var_z,
                mean_q,
                var_ratio: var_z / mean_q.value,
                var_ratio_interval: (lo / mean_q.value, hi / mean_q.value),
                mse_ratio: stats::ratio_of_means(&z2, &q),
                normalized_skewness: stats::skewness(&normalized),
                normalized_excess_kurtosis: stats::excess_kurtosis(&normalized),
                ks_distance: stats::ks_distance_normal(&normalized),
                correlation_with_spot: stats::correlation(&normalized, &s),
                kappa2_n: Estimate::of_mean(&counts),
                kappa2_n_sd: stats::variance(&counts).sqrt(),
                count_target: stats::mean(&targets),
                alarms: records.iter().filter(|r| r.alarm[ki]).count(),
            });
        }
    }
    Ok(ExperimentReport {
        paths: spec.paths,
        grid_steps: spec.grid_steps() * spec.refine.unwrap_or(1),
        horizon: spec.horizon(),
        master_seed: spec.master_seed,
        q_prefactor: q_prefactor(alpha, spec.payoff.convexity()),
        cells,
        records,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LelandSpec {
    pub spot: f64,
    pub sigma: f64,
    pub kappa0: f64,
    pub payoff: Payoff,
    pub ns: Vec<usize>,
    pub paths: usize,
    /// Grid steps per Leland interval `1/n`.
    pub steps_per_interval: usize,
    /// Continuity correction of the hitting-time trigger.
    pub overshoot_correction: bool,
    pub master_seed: u64,
}

impl LelandSpec {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.spot > 0.0 && self.sigma > 0.0 && self.kappa0 > 0.0) {
            errs.push("spot, sigma and kappa0 must be positive".to_string());
        }
        if self.ns.is_empty() || self.ns.contains(&0) {
            errs.push("n ladder must be non-empty with n ≥ 1".to_string());
        }
        if self.paths == 0 {
            errs.push("paths must be at least 1".to_string());
        }
        if self.steps_per_interval == 0 {
            errs.push("steps_per_interval must be at least 1".to_string());
        }
        if self.payoff.convexity() != crate::Convexity::Convex {
            errs.push("the Leland comparison needs a convex payoff".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::Config(errs))
        }
    }
}

/// Per-path terminal errors of the two strategies at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LelandRecord {
    pub index: usize,
    pub seed: u64,
    /// `f(S¹_1) - V_1`, Leland.
    pub error_leland: f64,
    /// `f(S¹_1) - V_1`, hitting-time.
    pub error_hitting: f64,
    /// `∫₀¹ |S̃Γ̌|² d⟨S̃⟩`
    pub gamma_energy: f64,
    pub n_hitting: usize,
    pub alarm: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LelandCell {
    pub n: usize,
    pub kappa_n: f64,
    pub alpha: f64,
    pub sigma_check_sq: f64,
    pub paths: usize,
    /// `κ_n⁻²·E[|f(S¹_1) - V_1|²]`
    pub mse_leland: Estimate,
    pub mse_hitting: Estimate,
    pub mse_ratio: Estimate,
    pub beta: f64,
    pub beta_hat: f64,
    pub target_ratio: f64,
    pub gamma_energy: Estimate,
    /// `β·E[∫|S̃Γ̌|²d⟨S̃⟩]` and `β̂·E[…]`, the limits of the two MSEs.
    pub target_mse_leland: f64,
    pub target_mse_hitting: f64,
    pub mean_n_hitting: Estimate,
    /// `mean(N)/n`
    pub count_ratio: f64,
    pub count_target: f64,
    pub alarms: usize,
    #[serde(skip)]
    pub records: Vec<LelandRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LelandReport {
    pub sigma: f64,
    pub kappa0: f64,
    pub master_seed: u64,
    pub cells: Vec<LelandCell>,
}

fn leland_path(spec: &LelandSpec, n: usize, i: usize) -> Result<LelandRecord> {
    let kernel = default_kernel();
    let seed = path_seed(spec.master_seed, i as u64);
    let model = ModelSpec::black_scholes(spec.spot, spec.sigma, 0.0, 1.0)?;
    let path = simulate_path(&model, 1.0, n * spec.steps_per_interval, seed)?;
    let kappa = spec.kappa0 / (n as f64).sqrt();
    let alpha = alpha_from_kappa0(spec.sigma, spec.kappa0);
    let last = path.len() - 1;
    let rec = Recording::At(vec![last]);
    let leland = run_leland_with(&path, &spec.payoff, spec.sigma, kappa, n, kernel, &rec)?;
    let cfg = StrategyConfig {
        charge_switch_cost: false,
        overshoot_correction: spec.overshoot_correction,
        ..StrategyConfig::hitting_time(spec.sigma * spec.sigma, alpha, kappa)
    };
    let hitting = run_hitting_time_with(&path, &spec.payoff, &cfg, kernel, &rec)?;
    // Γ^{+α} = Γ̌ under this choice of α; Q stops one step short of maturity
    let q = limit_q_with(&path.truncated(last), &spec.payoff, &cfg, kernel)?;
    Ok(LelandRecord {
        index: i,
        seed,
        error_leland: leland.terminal_shortfall,
        error_hitting: hitting.terminal_shortfall,
        gamma_energy: q.last().copied().unwrap_or(0.0) / q_prefactor(alpha, spec.payoff.convexity()),
        n_hitting: hitting.total_rebalances(),
        alarm: hitting.alarm.is_some(),
    })
}

/// Leland's equidistant strategy against the hitting-time strategy with
/// `κ_n = κ₀/√n`, `Σ̂ = σ²` and `α = (σ/κ₀)√(π/2)`, under Black-Scholes with
/// zero rate and unit maturity.
pub fn compare_leland(spec: &LelandSpec) -> Result<LelandReport> {
    spec.validate()?;
    let alpha = alpha_from_kappa0(spec.sigma, spec.kappa0);
    let x = spec.sigma / spec.kappa0;
    let mut cells = Vec::new();
    for &n in &spec.ns {
        let records: Vec<LelandRecord> = (0..spec.paths)
            .into_par_iter()
            .map(|i| leland_path(spec, n, i))
            .collect::<Result<_>>()?;
        let kappa = spec.kappa0 / (n as f64).sqrt();
        let scale = 1.0 / (kappa * kappa);
        let el: Vec<f64> = records.iter().map(|r| scale * r.error_leland * r.error_leland).collect();
        let eh: Vec<f64> = records.iter().map(|r| scale * r.error_hitting * r.error_hitting).collect();
        let energy: Vec<f64> = records.iter().map(|r| r.gamma_energy).collect();
        let counts: Vec<f64> = records.iter().map(|r| r.n_hitting as f64).collect();
        let gamma_energy = Estimate::of_mean(&energy);
        let mean_n = Estimate::of_mean(&counts);
        cells.push(LelandCell {
            n,
            kappa_n: kappa,
            alpha,
            sigma_check_sq: leland_variance(spec.sigma, kappa, n, 1.0),
            paths: records.len(),
            mse_leland: Estimate::of_mean(&el),
            mse_hitting: Estimate::of_mean(&eh),
            mse_ratio: stats::ratio_of_means(&el, &eh),
            beta: beta(x),
            beta_hat: beta_hat(x),
            target_ratio: beta(x) / beta_hat(x),
            gamma_energy,
            target_mse_leland: beta(x) * gamma_energy.value,
            target_mse_hitting: beta_hat(x) * gamma_energy.value,
            mean_n_hitting: mean_n,
            count_ratio: mean_n.value / n as f64,
            count_target: 2.0 / std::f64::consts::PI,
            alarms: records.iter().filter(|r| r.alarm).count(),
            records,
        });
    }
    Ok(LelandReport {
        sigma: spec.sigma,
        kappa0: spec.kappa0,
        master_seed: spec.master_seed,
        cells,
    })
}
