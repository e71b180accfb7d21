//! Experiment configuration: a strict TOML schema with defaults.
//!
//! Parsing collects every problem it finds (unknown keys, type errors and
//! constraint violations) before reporting, so a bad config is fixed in one
//! round trip.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hedge::{StrategyConfig, StrategyKind};
use crate::market::{Dynamics, ModelSpec, VolCurve};
use crate::payoff::{Convexity, Payoff};
use crate::pricing::{Method, PricingInputs};

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "model",
        &[
            "kind",
            "spot",
            "rate",
            "maturity",
            "sigma",
            "vol_knots",
            "v0",
            "speed",
            "mean_reversion",
            "vol_of_vol",
            "long_run_var",
            "correlation",
        ],
    ),
    (
        "payoff",
        &["kind", "strike", "knots", "left_slope", "right_slope", "coefficient", "exponent", "convexity"],
    ),
    (
        "strategy",
        &[
            "kind",
            "sigma_hat_sq",
            "alpha",
            "kappa",
            "n",
            "charge_switch_cost",
            "min_steps_per_rebalance",
            "overshoot_correction",
        ],
    ),
    ("grid", &["steps", "horizon", "refine", "steps_per_unit_time", "steps_per_interval"]),
    (
        "run",
        &["paths", "master_seed", "kappa_ladder", "n_ladder", "checkpoints", "kappa0", "dump_paths"],
    ),
    ("pricing", &["method", "points"]),
    ("output", &["dir", "formats"]),
];

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawModel {
    kind: Option<String>,
    spot: Option<f64>,
    rate: Option<f64>,
    maturity: Option<f64>,
    sigma: Option<f64>,
    vol_knots: Option<Vec<(f64, f64)>>,
    v0: Option<f64>,
    speed: Option<f64>,
    mean_reversion: Option<f64>,
    vol_of_vol: Option<f64>,
    long_run_var: Option<f64>,
    correlation: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawPayoff {
    kind: Option<String>,
    strike: Option<f64>,
    knots: Option<Vec<(f64, f64)>>,
    left_slope: Option<f64>,
    right_slope: Option<f64>,
    coefficient: Option<f64>,
    exponent: Option<f64>,
    convexity: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawStrategy {
    kind: Option<String>,
    sigma_hat_sq: Option<f64>,
    alpha: Option<f64>,
    kappa: Option<f64>,
    n: Option<usize>,
    charge_switch_cost: Option<bool>,
    min_steps_per_rebalance: Option<f64>,
    overshoot_correction: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Steps of `simulate` paths over the horizon.
    pub steps: usize,
    /// End of `simulate` paths; defaults to the maturity.
    pub horizon: Option<f64>,
    /// Brownian-bridge refinement factor.
    pub refine: Option<usize>,
    /// Grid density of `converge`.
    pub steps_per_unit_time: usize,
    /// Grid steps per Leland interval in `compare-leland`.
    pub steps_per_interval: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            steps: 10_000,
            horizon: None,
            refine: None,
            steps_per_unit_time: 50_000,
            steps_per_interval: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub paths: usize,
    pub master_seed: u64,
    pub kappa_ladder: Vec<f64>,
    pub n_ladder: Vec<usize>,
    /// Defaults to half the maturity.
    pub checkpoints: Option<Vec<f64>>,
    pub kappa0: f64,
    /// Number of leading `simulate` paths written as `times,s1,s0,qv` CSV.
    pub dump_paths: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            paths: 1000,
            master_seed: 0,
            kappa_ladder: vec![0.04, 0.02, 0.01],
            n_ladder: vec![250, 1000],
            checkpoints: None,
            kappa0: 0.15,
            dump_paths: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Auto,
    Quadrature,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Auto => Method::Auto,
            MethodName::Quadrature => Method::Quadrature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PricingSection {
    pub method: MethodName,
    /// `[S, R, Σ]` triples; defaults to `[spot, rate·T, Σ̂]`.
    pub points: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub payoff: Payoff,
    pub strategy: StrategyConfig,
    pub grid: GridConfig,
    pub run: RunConfig,
    pub pricing: PricingSection,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn checkpoints(&self) -> Vec<f64> {
        self.run
            .checkpoints
            .clone()
            .unwrap_or_else(|| vec![0.5 * self.model.maturity])
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon.unwrap_or(self.model.maturity)
    }

    pub fn pricing_points(&self) -> Vec<PricingInputs> {
        if self.pricing.points.is_empty() {
            vec![PricingInputs {
                spot: self.model.spot,
                log_discount: self.model.rate * self.model.maturity,
                variance: self.strategy.sigma_hat_sq,
            }]
        } else {
            self.pricing
                .points
                .iter()
                .map(|p| PricingInputs {
                    spot: p[0],
                    log_discount: p[1],
                    variance: p[2],
                })
                .collect()
        }
    }
}

fn section<T: for<'de> Deserialize<'de> + Default>(doc: &toml::Table, name: &str, errs: &mut Vec<String>) -> T {
    match doc.get(name) {
        None => T::default(),
        Some(v) => match v.clone().try_into::<T>() {
            Ok(t) => t,
            Err(e) => {
                errs.push(format!("[{name}]: {}", e.message().trim()));
                T::default()
            }
        },
    }
}

fn need<T: Copy>(v: Option<T>, key: &str, errs: &mut Vec<String>) -> Option<T> {
    if v.is_none() {
        errs.push(format!("missing key {key}"));
    }
    v
}

fn build_model(raw: RawModel, errs: &mut Vec<String>) -> Option<ModelSpec> {
    let spot = raw.spot.unwrap_or(100.0);
    let rate = raw.rate.unwrap_or(0.0);
    let maturity = raw.maturity.unwrap_or(1.0);
    let dynamics = match raw.kind.as_deref().unwrap_or("black_scholes") {
        "black_scholes" => Dynamics::BlackScholes {
            sigma: raw.sigma.unwrap_or(0.2),
        },
        "time_dependent_vol" => {
            let vol = match (raw.vol_knots, raw.v0, raw.speed, raw.long_run_var) {
                (Some(knots), None, None, None) => VolCurve::Knots { knots },
                (None, v0, speed, long_run_var) => VolCurve::MeanReverting {
                    v0: need(v0, "model.v0", errs)?,
                    speed: need(speed, "model.speed", errs)?,
                    long_run_var: need(long_run_var, "model.long_run_var", errs)?,
                },
                _ => {
                    errs.push("model: give either vol_knots or (v0, speed, long_run_var), not both".into());
                    return None;
                }
            };
            Dynamics::TimeDependentVol { vol }
        }
        "stoch_vol" => Dynamics::StochVol {
            v0: need(raw.v0, "model.v0", errs)?,
            mean_reversion: need(raw.mean_reversion, "model.mean_reversion", errs)?,
            vol_of_vol: need(raw.vol_of_vol, "model.vol_of_vol", errs)?,
            long_run_var: need(raw.long_run_var, "model.long_run_var", errs)?,
            correlation: raw.correlation.unwrap_or(0.0),
        },
        other => {
            errs.push(format!(
                "model.kind must be black_scholes, time_dependent_vol or stoch_vol, got {other:?}"
            ));
            return None;
        }
    };
    let m = ModelSpec {
        spot,
        rate,
        maturity,
        dynamics,
    };
    match m.validate() {
        Ok(()) => Some(m),
        Err(Error::Config(e)) => {
            errs.extend(e);
            None
        }
        Err(e) => {
            errs.push(e.to_string());
            None
        }
    }
}

fn build_payoff(raw: RawPayoff, errs: &mut Vec<String>) -> Option<Payoff> {
    let built = match raw.kind.as_deref().unwrap_or("call") {
        "call" => Payoff::call(raw.strike.unwrap_or(100.0)),
        "put" => Payoff::put(raw.strike.unwrap_or(100.0)),
        "piecewise_linear" => {
            let knots = match raw.knots {
                Some(k) => k,
                None => {
                    errs.push("missing key payoff.knots".into());
                    return None;
                }
            };
            Payoff::piecewise_linear(
                knots,
                need(raw.left_slope, "payoff.left_slope", errs)?,
                need(raw.right_slope, "payoff.right_slope", errs)?,
            )
        }
        "power" => Payoff::power(
            raw.coefficient.unwrap_or(1.0),
            need(raw.exponent, "payoff.exponent", errs)?,
        ),
        other => {
            errs.push(format!("payoff.kind must be call, put, piecewise_linear or power, got {other:?}"));
            return None;
        }
    };
    let declared = match raw.convexity.as_deref() {
        None => None,
        Some("convex") => Some(Convexity::Convex),
        Some("concave") => Some(Convexity::Concave),
        Some(other) => {
            errs.push(format!("payoff.convexity must be convex or concave, got {other:?}"));
            return None;
        }
    };
    match built.and_then(|p| match declared {
        Some(c) => p.with_declared_convexity(c),
        None => Ok(p),
    }) {
        Ok(p) => Some(p),
        Err(e) => {
            errs.push(format!("payoff: {e}"));
            None
        }
    }
}

fn build_strategy(raw: RawStrategy, model: Option<&ModelSpec>, errs: &mut Vec<String>) -> Option<StrategyConfig> {
    let default_budget = model
        .and_then(|m| m.constant_sigma().map(|s| s * s * m.maturity))
        .unwrap_or(0.04);
    let kind = match raw.kind.as_deref().unwrap_or("hitting_time") {
        "hitting_time" => StrategyKind::HittingTime,
        "continuous" => StrategyKind::Continuous,
        "leland" => StrategyKind::Leland {
            n: raw.n.unwrap_or(250),
        },
        other => {
            errs.push(format!("strategy.kind must be hitting_time, continuous or leland, got {other:?}"));
            return None;
        }
    };
    if raw.n.is_some() && !matches!(kind, StrategyKind::Leland { .. }) {
        errs.push("strategy.n only applies to the leland strategy".into());
    }
    Some(StrategyConfig {
        sigma_hat_sq: raw.sigma_hat_sq.unwrap_or(default_budget),
        alpha: raw.alpha.unwrap_or(2.0),
        kappa: raw.kappa.unwrap_or(if kind == StrategyKind::Continuous { 0.0 } else { 0.01 }),
        kind,
        charge_switch_cost: raw.charge_switch_cost.unwrap_or(true),
        min_steps_per_rebalance: raw.min_steps_per_rebalance.unwrap_or(20.0),
        overshoot_correction: raw.overshoot_correction.unwrap_or(false),
    })
}

/// Parses and validates a TOML experiment configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("malformed TOML: {}", e.message().trim())]))?;
    let mut errs = Vec::new();
    for (key, value) in &doc {
        match SECTIONS.iter().find(|(name, _)| name == key) {
            None => errs.push(format!("unknown section [{key}]")),
            Some((name, allowed)) => match value.as_table() {
                None => errs.push(format!("[{name}] must be a table")),
                Some(t) => {
                    for k in t.keys() {
                        if !allowed.contains(&k.as_str()) {
                            errs.push(format!("unknown key {name}.{k}"));
                        }
                    }
                }
            },
        }
    }
    let raw_model: RawModel = section(&doc, "model", &mut errs);
    let raw_payoff: RawPayoff = section(&doc, "payoff", &mut errs);
    let raw_strategy: RawStrategy = section(&doc, "strategy", &mut errs);
    let grid: GridConfig = section(&doc, "grid", &mut errs);
    let run: RunConfig = section(&doc, "run", &mut errs);
    let pricing: PricingSection = section(&doc, "pricing", &mut errs);
    let output: OutputConfig = section(&doc, "output", &mut errs);

    let model = build_model(raw_model, &mut errs);
    let payoff = build_payoff(raw_payoff, &mut errs);
    let strategy = build_strategy(raw_strategy, model.as_ref(), &mut errs);
    if let (Some(p), Some(s)) = (&payoff, &strategy) {
        errs.extend(s.violations(p).into_iter().map(|e| format!("strategy: {e}")));
    }
    if grid.steps == 0 {
        errs.push("grid.steps must be at least 1".into());
    }
    if grid.steps_per_unit_time == 0 || grid.steps_per_interval == 0 {
        errs.push("grid.steps_per_unit_time and grid.steps_per_interval must be at least 1".into());
    }
    if grid.refine.is_some_and(|f| f < 2) {
        errs.push("grid.refine must be at least 2".into());
    }
    if let (Some(h), Some(m)) = (grid.horizon, &model) {
        if !(h > 0.0 && h <= m.maturity) {
            errs.push(format!("grid.horizon must lie in (0, maturity], got {h}"));
        }
    }
    if run.paths == 0 {
        errs.push("run.paths must be at least 1".into());
    }
    if run.kappa_ladder.iter().any(|k| !(*k > 0.0)) {
        errs.push("run.kappa_ladder entries must be positive".into());
    }
    if run.kappa_ladder.windows(2).any(|w| w[1] >= w[0]) {
        errs.push("run.kappa_ladder must be strictly decreasing".into());
    }
    if run.n_ladder.contains(&0) {
        errs.push("run.n_ladder entries must be at least 1".into());
    }
    if !(run.kappa0 > 0.0) {
        errs.push("run.kappa0 must be positive".into());
    }
    if let (Some(cps), Some(m)) = (&run.checkpoints, &model) {
        if cps.is_empty() || cps.iter().any(|&t| !(t > 0.0 && t <= m.maturity)) || cps.windows(2).any(|w| w[1] <= w[0])
        {
            errs.push("run.checkpoints must be strictly increasing within (0, maturity]".into());
        }
    }
    for p in &pricing.points {
        if let Err(e) = PricingInputs::new(p[0], p[1], p[2]) {
            errs.push(format!("pricing.points: {e}"));
        }
    }
    if output.formats.is_empty() {
        errs.push("output.formats must name at least one of csv, json".into());
    }
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    Ok(ExperimentConfig {
        model: model.expect("no errors"),
        payoff: payoff.expect("no errors"),
        strategy: strategy.expect("no errors"),
        grid,
        run,
        pricing,
        output,
    })
}
