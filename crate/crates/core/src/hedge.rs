//! Hedging strategies run along a [`PathGrid`] with self-financing
//! accounting: the continuous conservative delta hedge, the hitting-time
//! strategy under linear transaction costs, and Leland's equidistant
//! strategy with enlarged volatility.
//!
//! Prices and greeks are evaluated in discounted coordinates: with
//! `S̃ = S¹/S⁰` and `R = -log S⁰`, `P(S¹, R, Σ) = S⁰·P(S̃, 0, Σ)` and
//! `∂P/∂S(S¹, R, Σ) = ∂P/∂S(S̃, 0, Σ)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::market::PathGrid;
use crate::payoff::{Convexity, Payoff};
use crate::pricing::{default_kernel, PricingInputs, PricingKernel};

/// Relative slack used to decide that the variance budget is spent.
pub const BUDGET_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyKind {
    Continuous,
    HittingTime,
    Leland { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    /// Variance budget `Σ̂`.
    pub sigma_hat_sq: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub kind: StrategyKind,
    /// Charge `κ|a - Π|S¹` when switching to buy-and-hold at `τ`.
    #[serde(default = "default_true")]
    pub charge_switch_cost: bool,
    /// Grid-resolution floor: mean grid steps between rebalances below this
    /// raises an alarm.
    #[serde(default = "default_min_steps")]
    pub min_steps_per_rebalance: f64,
    /// Shift the discrete trigger band inward by `β·Γ·S̃·√Δ⟨log S̃⟩`,
    /// `β = -ζ(1/2)/√(2π)`, so grid crossings approximate the continuous
    /// hitting times.
    #[serde(default)]
    pub overshoot_correction: bool,
}

/// `-ζ(1/2)/√(2π)`, the mean overshoot of a Gaussian random walk over a
/// level in units of its step standard deviation.
pub const OVERSHOOT_CONSTANT: f64 = 0.582_597_157_939_010_6;

fn default_true() -> bool {
    true
}

fn default_min_steps() -> f64 {
    20.0
}

impl StrategyConfig {
    pub fn hitting_time(sigma_hat_sq: f64, alpha: f64, kappa: f64) -> Self {
        Self {
            sigma_hat_sq,
            alpha,
            kappa,
            kind: StrategyKind::HittingTime,
            charge_switch_cost: true,
            min_steps_per_rebalance: default_min_steps(),
            overshoot_correction: false,
        }
    }

    pub fn continuous(sigma_hat_sq: f64) -> Self {
        Self {
            sigma_hat_sq,
            alpha: f64::INFINITY,
            kappa: 0.0,
            kind: StrategyKind::Continuous,
            charge_switch_cost: false,
            min_steps_per_rebalance: default_min_steps(),
            overshoot_correction: false,
        }
    }

    /// Constraint violations against `payoff`, all of them.
    pub fn violations(&self, payoff: &Payoff) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.sigma_hat_sq.is_finite() && self.sigma_hat_sq > 0.0) {
            errs.push(format!("sigma_hat_sq must be positive, got {}", self.sigma_hat_sq));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            errs.push(format!("kappa must be non-negative, got {}", self.kappa));
        }
        if !(self.min_steps_per_rebalance >= 0.0) {
            errs.push("min_steps_per_rebalance must be non-negative".to_string());
        }
        match self.kind {
            StrategyKind::Continuous => {}
            StrategyKind::HittingTime => {
                if !(self.alpha > 0.0) {
                    errs.push(format!("alpha must be positive, got {}", self.alpha));
                } else if payoff.convexity() == Convexity::Concave && !(self.alpha > 2.0) {
                    errs.push(format!(
                        "concave payoffs need alpha > 2 so that the shrunk variance (1 - 2/alpha)(Σ̂ - ⟨log S̃⟩) stays positive, got alpha = {}",
                        self.alpha
                    ));
                }
                if !(self.kappa > 0.0) {
                    errs.push("hitting-time rebalancing needs kappa > 0".to_string());
                }
            }
            StrategyKind::Leland { n } => {
                if n == 0 {
                    errs.push("leland partition size n must be at least 1".to_string());
                }
                if payoff.convexity() != Convexity::Convex {
                    errs.push("leland strategy needs a convex payoff".to_string());
                }
            }
        }
        errs
    }

    pub fn validate(&self, payoff: &Payoff) -> Result<()> {
        let errs = self.violations(payoff);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// `1 ± 2/α`, `+` for convex and `-` for concave payoffs.
    pub fn variance_factor(&self, payoff: &Payoff) -> f64 {
        match self.kind {
            StrategyKind::HittingTime => 1.0 + payoff.convexity().sign() * 2.0 / self.alpha,
            _ => 1.0,
        }
    }
}

/// Holdings and running totals of a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct HedgeState {
    /// Units of `S¹`.
    pub pi: f64,
    /// Units of `S⁰`.
    pub pi0: f64,
    pub last_rebalance: usize,
    pub cost_paid: f64,
    pub cost_paid_discounted: f64,
    pub stopped: bool,
    pub buy_and_hold: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeKind {
    Initial,
    Rebalance,
    Switch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trade {
    pub index: usize,
    pub time: f64,
    pub kind: TradeKind,
    pub pi_before: f64,
    pub pi_after: f64,
    pub pi0_before: f64,
    pub pi0_after: f64,
    pub s1: f64,
    pub s0: f64,
    pub cost: f64,
    /// Trigger band `ακ·S̃·|Γ|` in force before the trade (hitting-time only).
    pub threshold: Option<f64>,
}

/// Which grid points get value and error snapshots.
#[derive(Debug, Clone, PartialEq)]
pub enum Recording {
    Full,
    At(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HedgeOutcome {
    pub kind: StrategyKind,
    /// Grid indices of the snapshots below.
    pub recorded: Vec<usize>,
    pub times: Vec<f64>,
    /// `V = Π·S¹ + Π⁰·S⁰`, clearance cost ignored.
    pub value: Vec<f64>,
    /// `Ṽ = V/S⁰`
    pub discounted_value: Vec<f64>,
    /// Discounted model price `P/S⁰` of the strategy's pricing rule.
    pub model_price: Vec<f64>,
    /// Model delta at the snapshot (the post-`τ` holding once stopped).
    pub model_delta: Vec<f64>,
    /// `κ⁻¹(P/S⁰ - Ṽ)`; the raw error `P/S⁰ - Ṽ` when `κ = 0`.
    pub z: Vec<f64>,
    /// Rebalances `N_t` after time zero, up to and including each snapshot.
    pub n_rebalances: Vec<usize>,
    pub rebalance_times: Vec<f64>,
    pub rebalance_indices: Vec<usize>,
    pub trades: Vec<Trade>,
    pub stop_index: Option<usize>,
    /// Supporting line `(a, b)` of the payoff at `S̃_τ`.
    pub kink_line: Option<(f64, f64)>,
    pub final_state: HedgeState,
    pub initial_price_charged: f64,
    pub total_cost: f64,
    pub total_cost_discounted: f64,
    /// `S⁰·f(S̃) - V` at the last grid point; `f(S¹_T) - V_T` at maturity.
    pub terminal_shortfall: f64,
    pub mean_steps_per_rebalance: Option<f64>,
    pub alarm: Option<String>,
}

impl HedgeOutcome {
    pub fn total_rebalances(&self) -> usize {
        self.rebalance_indices.len()
    }

    pub fn terminal_value(&self) -> f64 {
        *self.value.last().expect("non-empty outcome")
    }

    /// Snapshot position of grid index `i`, if recorded.
    pub fn slot(&self, i: usize) -> Option<usize> {
        self.recorded.binary_search(&i).ok()
    }
}

enum Rule<'a> {
    EveryStep,
    Band { alpha: f64, corrected: bool },
    Dates(&'a [bool]),
}

struct Plan<'a> {
    kind: StrategyKind,
    rule: Rule<'a>,
    kappa: f64,
    /// Pricing variance at grid index `i`.
    variance: Box<dyn Fn(usize) -> f64 + 'a>,
    /// `Σ̂` when the strategy stops at budget exhaustion.
    budget: Option<f64>,
    charge_switch_cost: bool,
    min_steps: f64,
}

#[inline]
fn discounted(s_tilde: f64, variance: f64) -> PricingInputs {
    PricingInputs {
        spot: s_tilde,
        log_discount: 0.0,
        variance,
    }
}

fn check_path(path: &PathGrid) -> Result<()> {
    if path.len() < 2 {
        return Err(invalid("path needs at least two grid points"));
    }
    Ok(())
}

fn recorded_indices(path: &PathGrid, recording: &Recording) -> Result<Vec<usize>> {
    match recording {
        Recording::Full => Ok((0..path.len()).collect()),
        Recording::At(idx) => {
            let mut v = idx.clone();
            v.sort_unstable();
            v.dedup();
            if v.last().is_some_and(|&i| i >= path.len()) {
                return Err(invalid("recorded index beyond the end of the path"));
            }
            Ok(v)
        }
    }
}

fn drive(path: &PathGrid, payoff: &Payoff, kernel: &PricingKernel, plan: Plan<'_>, recording: &Recording) -> Result<HedgeOutcome> {
    check_path(path)?;
    let recorded = recorded_indices(path, recording)?;
    let m = path.len();
    let kappa = plan.kappa;
    let budget_spent = |i: usize| plan.budget.is_some_and(|b| path.qv[i] >= b * (1.0 - BUDGET_EPS));
    if budget_spent(0) {
        return Err(Error::Domain("variance budget is already spent at time zero".into()));
    }

    let mut out = HedgeOutcome {
        kind: plan.kind,
        recorded: recorded.clone(),
        times: recorded.iter().map(|&i| path.times[i]).collect(),
        value: Vec::with_capacity(recorded.len()),
        discounted_value: Vec::with_capacity(recorded.len()),
        model_price: Vec::with_capacity(recorded.len()),
        model_delta: Vec::with_capacity(recorded.len()),
        z: Vec::with_capacity(recorded.len()),
        n_rebalances: Vec::with_capacity(recorded.len()),
        rebalance_times: Vec::new(),
        rebalance_indices: Vec::new(),
        trades: Vec::new(),
        stop_index: None,
        kink_line: None,
        final_state: HedgeState::default(),
        initial_price_charged: 0.0,
        total_cost: 0.0,
        total_cost_discounted: 0.0,
        terminal_shortfall: 0.0,
        mean_steps_per_rebalance: None,
        alarm: None,
    };

    let mut st = HedgeState::default();
    let mut next_slot = 0usize;

    // time zero
    let var0 = (plan.variance)(0);
    if !(var0 > 0.0) {
        return Err(Error::Domain(format!("pricing variance at time zero must be positive, got {var0}")));
    }
    let (s1, s0, st0) = (path.s1[0], path.s0[0], path.s_tilde[0]);
    let (delta0, gamma0) = kernel.delta_gamma(payoff, discounted(st0, var0))?;
    let p0 = kernel.price(payoff, discounted(st0, var0))?;
    let initial_cost = kappa * delta0.abs() * s1;
    let wealth0 = s0 * p0 + initial_cost;
    out.initial_price_charged = wealth0;
    let cash0 = wealth0 / s0;
    st.pi = delta0;
    st.pi0 = cash0 - (delta0 * s1 + initial_cost) / s0;
    st.cost_paid = initial_cost;
    st.cost_paid_discounted = initial_cost / s0;
    out.trades.push(Trade {
        index: 0,
        time: path.times[0],
        kind: TradeKind::Initial,
        pi_before: 0.0,
        pi_after: st.pi,
        pi0_before: cash0,
        pi0_after: st.pi0,
        s1,
        s0,
        cost: initial_cost,
        threshold: None,
    });
    let band = |s_tilde: f64, gamma: f64| match plan.rule {
        Rule::Band { alpha, .. } => alpha * kappa * s_tilde * gamma.abs(),
        _ => 0.0,
    };
    let mut threshold = band(st0, gamma0);
    let mut delta_now = delta0;
    let record = |out: &mut HedgeOutcome, st: &HedgeState, i: usize, delta: f64, next_slot: &mut usize| -> Result<()> {
        if *next_slot < recorded.len() && recorded[*next_slot] == i {
            let v = st.pi * path.s1[i] + st.pi0 * path.s0[i];
            let vt = v / path.s0[i];
            let price = if st.stopped {
                payoff.eval_unchecked(path.s_tilde[i])
            } else {
                kernel.price(payoff, discounted(path.s_tilde[i], (plan.variance)(i).max(0.0)))?
            };
            let err = price - vt;
            out.value.push(v);
            out.discounted_value.push(vt);
            out.model_price.push(price);
            out.model_delta.push(delta);
            out.z.push(if kappa > 0.0 { err / kappa } else { err });
            out.n_rebalances.push(out.rebalance_indices.len());
            *next_slot += 1;
        }
        Ok(())
    };
    record(&mut out, &st, 0, delta0, &mut next_slot)?;

    for i in 1..m {
        if !st.stopped {
            let (s1, s0, s_tilde) = (path.s1[i], path.s0[i], path.s_tilde[i]);
            if budget_spent(i) {
                let (a, b) = payoff.kink_selection_unchecked(s_tilde);
                let dpi = a - st.pi;
                let cost = if plan.charge_switch_cost { kappa * dpi.abs() * s1 } else { 0.0 };
                let pi0_new = st.pi0 - (dpi * s1 + cost) / s0;
                out.trades.push(Trade {
                    index: i,
                    time: path.times[i],
                    kind: TradeKind::Switch,
                    pi_before: st.pi,
                    pi_after: a,
                    pi0_before: st.pi0,
                    pi0_after: pi0_new,
                    s1,
                    s0,
                    cost,
                    threshold: None,
                });
                st.pi = a;
                st.pi0 = pi0_new;
                st.cost_paid += cost;
                st.cost_paid_discounted += cost / s0;
                st.stopped = true;
                st.buy_and_hold = Some((a, pi0_new));
                out.stop_index = Some(i);
                out.kink_line = Some((a, b));
                delta_now = a;
            } else {
                let var = (plan.variance)(i);
                let target = match plan.rule {
                    Rule::EveryStep => Some(kernel.delta_gamma(payoff, discounted(s_tilde, var))?),
                    Rule::Band { corrected, .. } => {
                        let (d, g) = kernel.delta_gamma(payoff, discounted(s_tilde, var))?;
                        delta_now = d;
                        let level = if corrected {
                            let step_sd = (g * s_tilde).abs() * (path.qv[i] - path.qv[i - 1]).sqrt();
                            (threshold - OVERSHOOT_CONSTANT * step_sd).max(0.0)
                        } else {
                            threshold
                        };
                        ((d - st.pi).abs() >= level).then_some((d, g))
                    }
                    Rule::Dates(dates) => {
                        if dates[i] {
                            Some(kernel.delta_gamma(payoff, discounted(s_tilde, var))?)
                        } else {
                            None
                        }
                    }
                };
                if let Some((d, g)) = target {
                    let dpi = d - st.pi;
                    let cost = kappa * dpi.abs() * s1;
                    let pi0_new = st.pi0 - (dpi * s1 + cost) / s0;
                    out.trades.push(Trade {
                        index: i,
                        time: path.times[i],
                        kind: TradeKind::Rebalance,
                        pi_before: st.pi,
                        pi_after: d,
                        pi0_before: st.pi0,
                        pi0_after: pi0_new,
                        s1,
                        s0,
                        cost,
                        threshold: matches!(plan.rule, Rule::Band { .. }).then_some(threshold),
                    });
                    st.pi = d;
                    st.pi0 = pi0_new;
                    st.cost_paid += cost;
                    st.cost_paid_discounted += cost / s0;
                    st.last_rebalance = i;
                    out.rebalance_indices.push(i);
                    out.rebalance_times.push(path.times[i]);
                    threshold = band(s_tilde, g);
                    delta_now = d;
                } else if !matches!(plan.rule, Rule::Band { .. }) {
                    delta_now = st.pi;
                }
            }
        }
        record(&mut out, &st, i, delta_now, &mut next_slot)?;
    }

    let last = m - 1;
    let v_end = st.pi * path.s1[last] + st.pi0 * path.s0[last];
    out.terminal_shortfall = path.s0[last] * payoff.eval_unchecked(path.s_tilde[last]) - v_end;
    out.total_cost = st.cost_paid;
    out.total_cost_discounted = st.cost_paid_discounted;
    if matches!(plan.rule, Rule::Band { .. }) && !out.rebalance_indices.is_empty() {
        let active_steps = out.stop_index.unwrap_or(last) as f64;
        let mean = active_steps / out.rebalance_indices.len() as f64;
        out.mean_steps_per_rebalance = Some(mean);
        if mean < plan.min_steps {
            out.alarm = Some(format!(
                "hitting times under-resolved: {mean:.1} grid steps per rebalance on average, floor is {}",
                plan.min_steps
            ));
        }
    }
    out.final_state = st;
    Ok(out)
}

/// Continuous conservative delta hedge: rebalances at every grid point with
/// the delta at the remaining budget `Σ̂ - ⟨log S̃⟩_t`, then holds the
/// supporting line `(a, b)` from the first grid time the budget is spent.
pub fn run_continuous(path: &PathGrid, payoff: &Payoff, sigma_hat_sq: f64) -> Result<HedgeOutcome> {
    run_continuous_with(path, payoff, sigma_hat_sq, default_kernel(), &Recording::Full)
}

pub fn run_continuous_with(
    path: &PathGrid,
    payoff: &Payoff,
    sigma_hat_sq: f64,
    kernel: &PricingKernel,
    recording: &Recording,
) -> Result<HedgeOutcome> {
    payoff.check_nonvanishing_gamma()?;
    let cfg = StrategyConfig::continuous(sigma_hat_sq);
    cfg.validate(payoff)?;
    let plan = Plan {
        kind: StrategyKind::Continuous,
        rule: Rule::EveryStep,
        kappa: 0.0,
        variance: Box::new(move |i| sigma_hat_sq - path.qv[i]),
        budget: Some(sigma_hat_sq),
        charge_switch_cost: false,
        min_steps: 0.0,
    };
    drive(path, payoff, kernel, plan, recording)
}

/// Hitting-time strategy: trades to the delta at `Σ^{±α} = (1 ± 2/α)(Σ̂ -
/// ⟨log S̃⟩)` the first grid time the delta has moved by `ακ·S̃·|Γ|` since
/// the last trade, paying `κ|ΔΠ|S¹` per trade.
pub fn run_hitting_time(path: &PathGrid, payoff: &Payoff, cfg: &StrategyConfig) -> Result<HedgeOutcome> {
    run_hitting_time_with(path, payoff, cfg, default_kernel(), &Recording::Full)
}

pub fn run_hitting_time_with(
    path: &PathGrid,
    payoff: &Payoff,
    cfg: &StrategyConfig,
    kernel: &PricingKernel,
    recording: &Recording,
) -> Result<HedgeOutcome> {
    if cfg.kind != StrategyKind::HittingTime {
        return Err(invalid("run_hitting_time needs a hitting_time strategy config"));
    }
    payoff.check_nonvanishing_gamma()?;
    cfg.validate(payoff)?;
    let factor = cfg.variance_factor(payoff);
    let budget = cfg.sigma_hat_sq;
    let plan = Plan {
        kind: cfg.kind,
        rule: Rule::Band {
            alpha: cfg.alpha,
            corrected: cfg.overshoot_correction,
        },
        kappa: cfg.kappa,
        variance: Box::new(move |i| factor * (budget - path.qv[i])),
        budget: Some(budget),
        charge_switch_cost: cfg.charge_switch_cost,
        min_steps: cfg.min_steps_per_rebalance,
    };
    drive(path, payoff, kernel, plan, recording)
}

/// Leland's enlarged variance `σ̌² = σ² + σκ√(8/π)·√(n/T)`.
pub fn leland_variance(sigma: f64, kappa: f64, n: usize, maturity: f64) -> f64 {
    sigma * sigma + sigma * kappa * (8.0 / std::f64::consts::PI).sqrt() * (n as f64 / maturity).sqrt()
}

/// Leland's strategy: trades at the grid points nearest to `jT/n`,
/// `j = 0..n-1`, to the Black-Scholes delta at variance `σ̌²(T - t)`.
pub fn run_leland(path: &PathGrid, payoff: &Payoff, sigma: f64, kappa: f64, n: usize) -> Result<HedgeOutcome> {
    run_leland_with(path, payoff, sigma, kappa, n, default_kernel(), &Recording::Full)
}

pub fn run_leland_with(
    path: &PathGrid,
    payoff: &Payoff,
    sigma: f64,
    kappa: f64,
    n: usize,
    kernel: &PricingKernel,
    recording: &Recording,
) -> Result<HedgeOutcome> {
    check_path(path)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    let cfg = StrategyConfig {
        sigma_hat_sq: sigma * sigma,
        alpha: f64::INFINITY,
        kappa,
        kind: StrategyKind::Leland { n },
        charge_switch_cost: false,
        min_steps_per_rebalance: 0.0,
        overshoot_correction: false,
    };
    cfg.validate(payoff)?;
    if path.s0.iter().any(|&b| (b - 1.0).abs() > 1e-15) {
        return Err(Error::UnsupportedModel("leland runs need a zero interest rate".into()));
    }
    let maturity = path.maturity;
    if path.horizon() > maturity * (1.0 + 1e-12) {
        return Err(invalid("path extends past maturity"));
    }
    let var_rate = leland_variance(sigma, kappa, n, maturity);
    let mut dates = vec![false; path.len()];
    for j in 1..n {
        let t = maturity * j as f64 / n as f64;
        if t <= path.horizon() {
            let i = path.index_of(t);
            if i > 0 {
                dates[i] = true;
            }
        }
    }
    let plan = Plan {
        kind: cfg.kind,
        rule: Rule::Dates(&dates),
        kappa,
        variance: Box::new(move |i| var_rate * (maturity - path.times[i])),
        budget: None,
        charge_switch_cost: false,
        min_steps: 0.0,
    };
    drive(path, payoff, kernel, plan, recording)
}
