//! Variance ratio, MSE ratio, normality and rebalance-count statistics of the
//! normalized hedging error along a decreasing ladder of cost levels.
//!
//! cargo run --release --example convergence_study -- [paths] [steps_per_unit_time]

use robust_hedge::asymptotics::{convergence_study, ConvergenceSpec};
use robust_hedge::hedge::StrategyConfig;
use robust_hedge::market::ModelSpec;
use robust_hedge::Payoff;

fn main() -> robust_hedge::Result<()> {
    let mut args = std::env::args().skip(1);
    let paths = args.next().and_then(|a| a.parse().ok()).unwrap_or(2000);
    let density = args.next().and_then(|a| a.parse().ok()).unwrap_or(50_000);
    let spec = ConvergenceSpec {
        model: ModelSpec::black_scholes(100.0, 0.2, 0.0, 1.0)?,
        payoff: Payoff::call(100.0)?,
        strategy: StrategyConfig {
            overshoot_correction: std::env::var_os("NO_CORRECTION").is_none(),
            ..StrategyConfig::hitting_time(0.04, 2.0, 0.04)
        },
        kappas: vec![0.04, 0.02, 0.01],
        paths,
        steps_per_unit_time: density,
        refine: None,
        checkpoints: vec![0.5],
        master_seed: 2024,
    };
    let t0 = std::time::Instant::now();
    let report = convergence_study(&spec)?;
    println!("{} paths, {} grid steps, {:.1?}", report.paths, report.grid_steps, t0.elapsed());
    println!("  kappa   mean(Z)/sd  var_ratio [95% CI]          mse_ratio        skew    exkurt  ks      corr    k²N (target)");
    for c in &report.cells {
        println!(
            "  {:<6}  {:+.4}      {:.4} [{:.4}, {:.4}]  {:.4} ± {:.4}  {:+.3}  {:+.3}  {:.4}  {:+.4}  {:.5} ({:.5})",
            c.kappa,
            c.mean_z.value / c.var_z.sqrt(),
            c.var_ratio,
            c.var_ratio_interval.0,
            c.var_ratio_interval.1,
            c.mse_ratio.value,
            c.mse_ratio.std_error,
            c.normalized_skewness,
            c.normalized_excess_kurtosis,
            c.ks_distance,
            c.correlation_with_spot,
            c.kappa2_n.value,
            c.count_target,
        );
    }
    Ok(())
}
