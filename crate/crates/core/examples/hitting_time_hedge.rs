//! One path of the hitting-time strategy: rebalancing when `|Δ - Π|` reaches
//! `α κ S̃ |Γ|`, then buy-and-hold once the variance budget is spent.
//!
//! cargo run --release --example hitting_time_hedge -- [kappa] [alpha] [seed]

use robust_hedge::asymptotics::{count_limit, limit_q};
use robust_hedge::hedge::{run_hitting_time, StrategyConfig, TradeKind};
use robust_hedge::market::{simulate_path, ModelSpec};
use robust_hedge::Payoff;

fn main() -> robust_hedge::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kappa = args.first().and_then(|a| a.parse().ok()).unwrap_or(0.01);
    let alpha = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(2.0);
    let seed = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(1);
    let model = ModelSpec::black_scholes(100.0, 0.2, 0.0, 1.0)?;
    let call = Payoff::call(100.0)?;
    // budget a little below the realized variance so the switch shows up
    let cfg = StrategyConfig::hitting_time(0.036, alpha, kappa);
    let path = simulate_path(&model, 1.0, 50_000, seed)?;
    let out = run_hitting_time(&path, &call, &cfg)?;
    let last = path.len() - 1;
    println!("realized qv {:.5}, budget {}", path.realized_qv(), cfg.sigma_hat_sq);
    println!("initial wealth {:.6} (price {:.6})", out.initial_price_charged, out.model_price[0]);
    println!(
        "rebalances {}, κ²N = {:.5}, total cost {:.5}",
        out.total_rebalances(),
        kappa * kappa * out.total_rebalances() as f64,
        out.total_cost
    );
    match out.stop_index {
        Some(i) => {
            let (a, b) = out.kink_line.unwrap();
            let cut = path.truncated(i);
            let q = *limit_q(&cut, &call, &cfg)?.last().unwrap();
            println!(
                "budget spent at t = {:.4}: hold {a:.4} shares, bond {b:.4}; κ²N target before the switch {:.5}, Q = {q:.2}",
                path.times[i],
                count_limit(path.qv[i], alpha)
            );
        }
        None => println!("budget never spent"),
    }
    for t in out.trades.iter().filter(|t| t.kind != TradeKind::Rebalance) {
        println!("  {:?} at t = {:.4}: Π {:.4} -> {:.4}", t.kind, t.time, t.pi_before, t.pi_after);
    }
    println!(
        "terminal value {:.5}, payoff {:.5}, shortfall {:+.5}, Z_T = {:+.3}",
        out.value[last],
        call.eval(path.s1[last])?,
        out.terminal_shortfall,
        out.z[last]
    );
    if let Some(a) = &out.alarm {
        println!("alarm: {a}");
    }
    Ok(())
}
