//! Frictionless hedging at the price computed with a variance budget `Σ̂`.
//! The hedge super-replicates whenever the realized quadratic variation stays
//! below the budget, here under a time-dependent volatility the hedger does
//! not know.
//!
//! cargo run --release --example conservative_hedge -- [paths] [steps]

use robust_hedge::hedge::{run_continuous_with, Recording};
use robust_hedge::market::{path_seed, simulate_path, Dynamics, ModelSpec, VolCurve};
use robust_hedge::pricing::default_kernel;
use robust_hedge::Payoff;

fn main() -> robust_hedge::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let paths: u64 = args.first().and_then(|a| a.parse().ok()).unwrap_or(200);
    let steps = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(20_000);
    let model = ModelSpec {
        spot: 100.0,
        rate: 0.03,
        maturity: 1.0,
        dynamics: Dynamics::TimeDependentVol {
            vol: VolCurve::Knots {
                knots: vec![(0.0, 0.15), (0.5, 0.25), (1.0, 0.18)],
            },
        },
    };
    model.validate()?;
    let call = Payoff::call(100.0)?;
    for budget in [0.03, 0.06] {
        let mut worst = f64::NEG_INFINITY;
        let mut mean = 0.0;
        let mut qv_max: f64 = 0.0;
        for i in 0..paths {
            let path = simulate_path(&model, 1.0, steps, path_seed(3, i))?;
            let rec = Recording::At(vec![path.len() - 1]);
            let out = run_continuous_with(&path, &call, budget, default_kernel(), &rec)?;
            worst = worst.max(out.terminal_shortfall);
            mean += out.terminal_shortfall / paths as f64;
            qv_max = qv_max.max(path.realized_qv());
        }
        println!(
            "Σ̂ = {budget}: max realized qv {qv_max:.4}, mean shortfall {mean:+.4}, worst shortfall {worst:+.4}"
        );
    }
    Ok(())
}
