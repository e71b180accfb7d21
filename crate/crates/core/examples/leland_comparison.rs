//! Leland's equidistant strategy against hitting-time rebalancing with the
//! matching enlargement `α = (σ/κ₀)√(π/2)`, costs `κ_n = κ₀/√n`.
//!
//! cargo run --release --example leland_comparison -- [paths] [steps_per_interval] [sigma] [n ...]

use robust_hedge::asymptotics::{compare_leland, LelandSpec};
use robust_hedge::Payoff;

fn main() -> robust_hedge::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let paths = args.first().and_then(|a| a.parse().ok()).unwrap_or(1000);
    let steps_per_interval = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    let sigma = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(0.2);
    let mut ns: Vec<usize> = args.iter().skip(3).filter_map(|a| a.parse().ok()).collect();
    if ns.is_empty() {
        ns = vec![250, 1000];
    }
    let spec = LelandSpec {
        spot: 100.0,
        sigma,
        kappa0: 0.15,
        payoff: Payoff::call(100.0)?,
        ns,
        paths,
        steps_per_interval,
        overshoot_correction: std::env::var_os("NO_CORRECTION").is_none(),
        master_seed: 7,
    };
    let t0 = std::time::Instant::now();
    let report = compare_leland(&spec)?;
    println!("sigma = {sigma}, kappa0 = 0.15, {paths} paths, {:.1?}", t0.elapsed());
    for c in &report.cells {
        println!(
            "  n = {:<5} κ_n = {:.5}  MSE/κ²: leland {:.1} ± {:.1} (β·J {:.1}), hitting {:.1} ± {:.1} (β̂·J {:.1}), J = {:.1} ± {:.1}",
            c.n,
            c.kappa_n,
            c.mse_leland.value,
            c.mse_leland.std_error,
            c.target_mse_leland,
            c.mse_hitting.value,
            c.mse_hitting.std_error,
            c.target_mse_hitting,
            c.gamma_energy.value,
            c.gamma_energy.std_error
        );
        println!(
            "             ratio {:.4} ± {:.4} (target β/β̂ = {:.4});  N/n = {:.4} (target 2/π = {:.4});  alarms {}",
            c.mse_ratio.value, c.mse_ratio.std_error, c.target_ratio, c.count_ratio, c.count_target, c.alarms
        );
    }
    Ok(())
}
