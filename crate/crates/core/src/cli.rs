//! Command-line front end: `price`, `greeks`, `simulate`, `converge` and
//! `compare-leland`, each writing CSV and JSON artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::asymptotics::stats::{self, Estimate};
use crate::asymptotics::{compare_leland, convergence_study, ConvergenceSpec, LelandSpec};
use crate::config::{parse_config, ExperimentConfig, Format};
use crate::error::{Error, Result};
use crate::hedge::{run_continuous_with, run_hitting_time_with, run_leland_with, Recording, StrategyKind};
use crate::market::{path_seed, refine_grid, simulate_path};
use crate::pricing::{PricingKernel, QuadratureConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_ALARM: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "robust-hedge", version, about = "Conservative delta hedging under variance uncertainty and transaction costs")]
pub struct Cli {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding run.master_seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; affects speed only.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, overriding output.dir.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Price the payoff at the configured (S, R, Σ) points.
    Price,
    /// Greeks and PDE residuals at the configured points.
    Greeks,
    /// Hedge simulated paths with the configured strategy.
    Simulate,
    /// Convergence study of the normalized hedging error over a kappa ladder.
    Converge,
    /// Leland's strategy against hitting-time rebalancing.
    CompareLeland,
}

impl Command {
    fn stem(self) -> &'static str {
        match self {
            Command::Price => "price",
            Command::Greeks => "greeks",
            Command::Simulate => "simulate",
            Command::Converge => "converge",
            Command::CompareLeland => "compare_leland",
        }
    }
}

/// Artifacts written by a run and the number of numeric alarms raised.
#[derive(Debug, Clone, Default)]
pub struct RunStatus {
    pub artifacts: Vec<PathBuf>,
    pub alarms: usize,
}

pub fn exit_code(result: &Result<RunStatus>) -> i32 {
    match result {
        Ok(s) if s.alarms == 0 => EXIT_OK,
        Ok(_) => EXIT_ALARM,
        Err(Error::NumericFailure(_)) => EXIT_NUMERIC,
        Err(_) => EXIT_INVALID,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = load_config(&cli).and_then(|cfg| execute(cli.command, &cfg, cli.threads));
    match &result {
        Ok(s) => {
            for a in &s.artifacts {
                println!("{}", a.display());
            }
            if s.alarms > 0 {
                eprintln!("completed with {} numeric alarm(s)", s.alarms);
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    exit_code(&result)
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let text = match &cli.config {
        Some(p) => fs::read_to_string(p)?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(s) = cli.seed {
        cfg.run.master_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    Ok(cfg)
}

/// Runs `command` on a pool of `threads` workers (rayon's default when
/// `None`).
pub fn execute(command: Command, cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunStatus> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    fs::create_dir_all(&cfg.output.dir)?;
    pool.install(|| match command {
        Command::Price | Command::Greeks => run_pricing(command, cfg),
        Command::Simulate => run_simulate(cfg),
        Command::Converge => run_converge(cfg),
        Command::CompareLeland => run_compare_leland(cfg),
    })
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

struct Artifacts<'a> {
    cfg: &'a ExperimentConfig,
    status: RunStatus,
}

impl<'a> Artifacts<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Self {
            cfg,
            status: RunStatus::default(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.output.dir.join(name)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        if !self.cfg.output.wants(Format::Csv) {
            return Ok(());
        }
        let path = self.path(name);
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        self.status.artifacts.push(path);
        Ok(())
    }

    fn json(&mut self, command: Command, summary: impl Serialize) -> Result<()> {
        if !self.cfg.output.wants(Format::Json) {
            return Ok(());
        }
        let path = self.path(&format!("{}.json", command.stem()));
        let doc = json!({
            "command": command.stem(),
            "config": self.cfg,
            "summary": summary,
        });
        let mut f = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut f, &doc)?;
        f.write_all(b"\n")?;
        f.flush()?;
        self.status.artifacts.push(path);
        let meta = self.path(&format!("{}.meta.json", command.stem()));
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        fs::write(
            &meta,
            serde_json::to_string_pretty(&json!({
                "created_unix_secs": created,
                "threads": rayon::current_num_threads(),
                "version": env!("CARGO_PKG_VERSION"),
            }))?,
        )?;
        self.status.artifacts.push(meta);
        Ok(())
    }

    fn finish(self, alarms: usize) -> RunStatus {
        RunStatus {
            alarms,
            ..self.status
        }
    }
}

fn run_pricing(command: Command, cfg: &ExperimentConfig) -> Result<RunStatus> {
    let kernel = PricingKernel::new(QuadratureConfig::default(), cfg.pricing.method.into())?;
    let points = cfg.pricing_points();
    let mut out = Artifacts::new(cfg);
    let mut alarms = 0;
    if command == Command::Price {
        let prices = points
            .iter()
            .map(|p| kernel.price(&cfg.payoff, *p))
            .collect::<Result<Vec<_>>>()?;
        alarms += prices.iter().filter(|p| !p.is_finite()).count();
        out.csv(
            "price.csv",
            &["spot", "log_discount", "variance", "price"],
            points
                .iter()
                .zip(&prices)
                .map(|(p, v)| vec![fmt_f64(p.spot), fmt_f64(p.log_discount), fmt_f64(p.variance), fmt_f64(*v)]),
        )?;
        let rows: Vec<_> = points
            .iter()
            .zip(&prices)
            .map(|(p, v)| json!({"inputs": p, "price": v}))
            .collect();
        out.json(command, rows)?;
    } else {
        let mut rows = Vec::new();
        for p in &points {
            let g = kernel.greeks(&cfg.payoff, *p)?;
            let r = kernel.pde_residuals(&cfg.payoff, *p)?;
            if ![g.price, g.delta, g.gamma, g.d_sigma, g.d_r].iter().all(|x| x.is_finite()) {
                alarms += 1;
            }
            rows.push((*p, g, r));
        }
        out.csv(
            "greeks.csv",
            &[
                "spot",
                "log_discount",
                "variance",
                "price",
                "delta",
                "gamma",
                "d_sigma",
                "d_r",
                "r1",
                "r2",
                "r3",
                "r4",
            ],
            rows.iter().map(|(p, g, r)| {
                [
                    p.spot,
                    p.log_discount,
                    p.variance,
                    g.price,
                    g.delta,
                    g.gamma,
                    g.d_sigma,
                    g.d_r,
                    r.r1,
                    r.r2,
                    r.r3,
                    r.r4,
                ]
                .iter()
                .map(|x| fmt_f64(*x))
                .collect()
            }),
        )?;
        let doc: Vec<_> = rows
            .iter()
            .map(|(p, g, r)| json!({"inputs": p, "greeks": g, "pde_residuals": r}))
            .collect();
        out.json(command, doc)?;
    }
    Ok(out.finish(alarms))
}

#[derive(Debug, Clone, Serialize)]
struct SimulateRow {
    seed: u64,
    n_rebalances: usize,
    terminal_shortfall: f64,
    z_at_t: f64,
    total_cost: f64,
    alarm: bool,
}

fn run_simulate(cfg: &ExperimentConfig) -> Result<RunStatus> {
    let kernel = crate::pricing::default_kernel();
    let horizon = cfg.horizon();
    let rows: Vec<SimulateRow> = (0..cfg.run.paths)
        .into_par_iter()
        .map(|i| -> Result<SimulateRow> {
            let seed = path_seed(cfg.run.master_seed, i as u64);
            let mut path = simulate_path(&cfg.model, horizon, cfg.grid.steps, seed)?;
            if let Some(f) = cfg.grid.refine {
                path = refine_grid(&path, f, seed)?;
            }
            if i < cfg.run.dump_paths {
                let p = cfg.output.dir.join(format!("path_{i}.csv"));
                path.write_csv(BufWriter::new(File::create(p)?))?;
            }
            let rec = Recording::At(vec![path.len() - 1]);
            let out = match cfg.strategy.kind {
                StrategyKind::Continuous => run_continuous_with(&path, &cfg.payoff, cfg.strategy.sigma_hat_sq, kernel, &rec)?,
                StrategyKind::HittingTime => run_hitting_time_with(&path, &cfg.payoff, &cfg.strategy, kernel, &rec)?,
                StrategyKind::Leland { n } => {
                    let sigma = cfg.model.constant_sigma().ok_or_else(|| {
                        Error::UnsupportedModel("the leland strategy needs a black_scholes model".into())
                    })?;
                    run_leland_with(&path, &cfg.payoff, sigma, cfg.strategy.kappa, n, kernel, &rec)?
                }
            };
            Ok(SimulateRow {
                seed,
                n_rebalances: out.total_rebalances(),
                terminal_shortfall: out.terminal_shortfall,
                z_at_t: *out.z.last().expect("recorded"),
                total_cost: out.total_cost,
                alarm: out.alarm.is_some(),
            })
        })
        .collect::<Result<_>>()?;
    let mut out = Artifacts::new(cfg);
    for i in 0..cfg.run.paths.min(cfg.run.dump_paths) {
        out.status.artifacts.push(cfg.output.dir.join(format!("path_{i}.csv")));
    }
    out.csv(
        "simulate.csv",
        &["seed", "n_rebalances", "terminal_shortfall", "z_at_T", "total_cost"],
        rows.iter().map(|r| {
            vec![
                r.seed.to_string(),
                r.n_rebalances.to_string(),
                fmt_f64(r.terminal_shortfall),
                fmt_f64(r.z_at_t),
                fmt_f64(r.total_cost),
            ]
        }),
    )?;
    let col = |f: fn(&SimulateRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let shortfall = col(|r| r.terminal_shortfall);
    let z = col(|r| r.z_at_t);
    let alarms = rows.iter().filter(|r| r.alarm).count()
        + rows
            .iter()
            .filter(|r| !(r.terminal_shortfall.is_finite() && r.z_at_t.is_finite()))
            .count();
    let summary = json!({
        "paths": rows.len(),
        "terminal_shortfall": Estimate::of_mean(&shortfall),
        "terminal_shortfall_sd": stats::variance(&shortfall).sqrt(),
        "z_at_T": Estimate::of_mean(&z),
        "z_at_T_variance": stats::variance(&z),
        "n_rebalances": Estimate::of_mean(&col(|r| r.n_rebalances as f64)),
        "total_cost": Estimate::of_mean(&col(|r| r.total_cost)),
        "resolution_alarms": rows.iter().filter(|r| r.alarm).count(),
    });
    out.json(Command::Simulate, summary)?;
    Ok(out.finish(alarms))
}

fn run_converge(cfg: &ExperimentConfig) -> Result<RunStatus> {
    let spec = ConvergenceSpec {
        model: cfg.model.clone(),
        payoff: cfg.payoff.clone(),
        strategy: cfg.strategy.clone(),
        kappas: cfg.run.kappa_ladder.clone(),
        paths: cfg.run.paths,
        steps_per_unit_time: cfg.grid.steps_per_unit_time,
        refine: cfg.grid.refine,
        checkpoints: cfg.checkpoints(),
        master_seed: cfg.run.master_seed,
    };
    let report = convergence_study(&spec)?;
    let mut out = Artifacts::new(cfg);
    for (ki, kappa) in spec.kappas.iter().enumerate() {
        let mut rows = Vec::new();
        for r in &report.records {
            for (ci, t) in spec.checkpoints.iter().enumerate() {
                rows.push(vec![
                    r.index.to_string(),
                    r.seed.to_string(),
                    fmt_f64(*t),
                    fmt_f64(r.s_tilde[ci]),
                    fmt_f64(r.qv[ci]),
                    fmt_f64(r.q[ci]),
                    fmt_f64(r.z[ki][ci]),
                    r.n_rebalances[ki][ci].to_string(),
                    r.alarm[ki].to_string(),
                ]);
            }
        }
        out.csv(
            &format!("converge_kappa_{}.csv", fmt_name(*kappa)),
            &["path", "seed", "time", "s_tilde", "qv", "q", "z", "n_rebalances", "alarm"],
            rows,
        )?;
    }
    let numeric = report
        .cells
        .iter()
        .filter(|c| !c.degenerate && !(c.var_ratio.is_finite() && c.mse_ratio.value.is_finite()))
        .count();
    let alarms = report.alarms() + numeric;
    let summary = json!({
        "targets": {
            "variance_ratio": 1.0,
            "mse_ratio": 1.0,
            "normalized_law": "standard normal",
            "kappa2_n": "mean of qv_t / alpha^2",
        },
        "report": report,
    });
    out.json(Command::Converge, summary)?;
    Ok(out.finish(alarms))
}

fn run_compare_leland(cfg: &ExperimentConfig) -> Result<RunStatus> {
    let sigma = cfg
        .model
        .constant_sigma()
        .ok_or_else(|| Error::UnsupportedModel("compare-leland needs a black_scholes model".into()))?;
    if cfg.model.rate != 0.0 || cfg.model.maturity != 1.0 {
        return Err(Error::UnsupportedModel("compare-leland runs with rate = 0 and maturity = 1".into()));
    }
    let spec = LelandSpec {
        spot: cfg.model.spot,
        sigma,
        kappa0: cfg.run.kappa0,
        payoff: cfg.payoff.clone(),
        ns: cfg.run.n_ladder.clone(),
        paths: cfg.run.paths,
        steps_per_interval: cfg.grid.steps_per_interval,
        overshoot_correction: cfg.strategy.overshoot_correction,
        master_seed: cfg.run.master_seed,
    };
    let report = compare_leland(&spec)?;
    let mut out = Artifacts::new(cfg);
    for c in &report.cells {
        out.csv(
            &format!("compare_leland_n_{}.csv", c.n),
            &["path", "seed", "error_leland", "error_hitting", "gamma_energy", "n_hitting", "alarm"],
            c.records.iter().map(|r| {
                vec![
                    r.index.to_string(),
                    r.seed.to_string(),
                    fmt_f64(r.error_leland),
                    fmt_f64(r.error_hitting),
                    fmt_f64(r.gamma_energy),
                    r.n_hitting.to_string(),
                    r.alarm.to_string(),
                ]
            }),
        )?;
    }
    let alarms = report.cells.iter().map(|c| c.alarms).sum::<usize>()
        + report.cells.iter().filter(|c| !c.mse_ratio.value.is_finite()).count();
    out.json(Command::CompareLeland, &report)?;
    Ok(out.finish(alarms))
}

fn fmt_name(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

/// Convenience for callers that hold a config path.
pub fn run_file(command: Command, config: &Path, threads: Option<usize>) -> Result<RunStatus> {
    let cfg = parse_config(&fs::read_to_string(config)?)?;
    execute(command, &cfg, threads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path, extra: &str) -> ExperimentConfig {
        let text = format!("[output]\ndir = {:?}\n{extra}", dir.display().to_string());
        parse_config(&text).unwrap()
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(RunStatus::default())), EXIT_OK);
        assert_eq!(
            exit_code(&Ok(RunStatus {
                alarms: 1,
                ..Default::default()
            })),
            EXIT_ALARM
        );
        assert_eq!(exit_code(&Err(Error::InvalidInput("x".into()))), EXIT_INVALID);
        assert_eq!(exit_code(&Err(Error::Config(vec![]))), EXIT_INVALID);
        assert_eq!(exit_code(&Err(Error::NumericFailure("x".into()))), EXIT_NUMERIC);
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(7.965567455405798).parse::<f64>().unwrap(), 7.965567455405798);
    }

    #[test]
    fn price_writes_csv_and_json_with_config_echo() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "[pricing]\npoints = [[100.0, 0.0, 0.04], [90.0, 0.05, 0.09]]\n");
        let s = execute(Command::Price, &cfg, Some(1)).unwrap();
        assert_eq!(s.alarms, 0);
        let csv = fs::read_to_string(dir.path().join("price.csv")).unwrap();
        assert!(csv.starts_with("spot,log_discount,variance,price\n"));
        assert!(csv.contains("7.96556745540580"));
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("price.json")).unwrap()).unwrap();
        assert_eq!(doc["config"]["run"]["paths"], 1000);
        assert_eq!(doc["summary"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn simulate_is_byte_identical_across_runs_and_threads() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let extra = "[run]\npaths = 12\nmaster_seed = 5\ndump_paths = 1\n[grid]\nsteps = 2000\n";
        execute(Command::Simulate, &config(a.path(), extra), Some(1)).unwrap();
        execute(Command::Simulate, &config(b.path(), extra), Some(3)).unwrap();
        let summary = |d: &Path| {
            let mut v: serde_json::Value = serde_json::from_slice(&fs::read(d.join("simulate.json")).unwrap()).unwrap();
            v["config"]["output"]["dir"] = serde_json::Value::Null;
            serde_json::to_vec(&v).unwrap()
        };
        assert_eq!(summary(a.path()), summary(b.path()));
        for f in ["simulate.csv", "path_0.csv"] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
        let csv = fs::read_to_string(a.path().join("simulate.csv")).unwrap();
        assert!(csv.starts_with("seed,n_rebalances,terminal_shortfall,z_at_T,total_cost\n"));
        assert_eq!(csv.lines().count(), 13);
    }

    #[test]
    fn coarse_simulation_reports_an_alarm() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "[run]\npaths = 4\n[grid]\nsteps = 100\n");
        let r = execute(Command::Simulate, &cfg, Some(1));
        assert_eq!(exit_code(&r), EXIT_ALARM);
        assert!(dir.path().join("simulate.csv").exists());
    }

    #[test]
    fn cli_rejects_empty_runs_and_bad_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("c.toml");
        fs::write(&cfg_path, "[run]\npaths = 0\n").unwrap();
        let code = main_with_args(["robust-hedge", "simulate", "--config", cfg_path.to_str().unwrap()]);
        assert_eq!(code, EXIT_INVALID);
        assert_eq!(main_with_args(["robust-hedge", "frobnicate"]), EXIT_INVALID);
        assert_eq!(main_with_args(["robust-hedge", "price", "--threads", "0", "--out", dir.path().to_str().unwrap()]), EXIT_INVALID);
    }

    #[test]
    fn cli_runs_greeks_with_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o");
        let code = main_with_args(["robust-hedge", "greeks", "--seed", "9", "--out", out.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("greeks.json")).unwrap()).unwrap();
        assert_eq!(doc["config"]["run"]["master_seed"], 9);
        assert!(doc["summary"][0]["pde_residuals"]["r1"].as_f64().unwrap().abs() < 1e-8);
    }

    #[test]
    fn small_converge_and_leland_runs_write_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(
            dir.path(),
            "[run]\npaths = 8\nkappa_ladder = [0.04, 0.02]\nn_ladder = [10]\n[grid]\nsteps_per_unit_time = 4000\nsteps_per_interval = 40\n",
        );
        let s = execute(Command::Converge, &cfg, Some(2)).unwrap();
        assert!(dir.path().join("converge_kappa_0p04.csv").exists());
        assert!(s.artifacts.iter().any(|p| p.ends_with("converge.json")));
        execute(Command::CompareLeland, &cfg, Some(2)).unwrap();
        assert!(dir.path().join("compare_leland_n_10.csv").exists());
    }
}
