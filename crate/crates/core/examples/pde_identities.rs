//! The pricing PDE in `(S, R, Σ)`: the four residuals should vanish up to
//! quadrature and finite-difference error.
//!
//! cargo run --release --example pde_identities

use robust_hedge::pricing::default_kernel;
use robust_hedge::{Payoff, PricingInputs};

fn main() -> robust_hedge::Result<()> {
    let kernel = default_kernel();
    let payoffs = [
        ("call", Payoff::call(100.0)?),
        ("strangle", Payoff::piecewise_linear(vec![(90.0, 0.0), (110.0, 0.0)], -1.0, 1.0)?),
        ("S^1.5", Payoff::power(1.0, 1.5)?),
    ];
    for (name, f) in &payoffs {
        let mut worst: f64 = 0.0;
        for s in [60.0, 80.0, 100.0, 120.0, 150.0] {
            for v in [0.01, 0.04, 0.16] {
                for r in [0.0, 0.05] {
                    let res = kernel.pde_residuals(f, PricingInputs::new(s, r, v)?)?;
                    worst = worst.max(res.max_abs());
                }
            }
        }
        println!("{name:<24} max |residual| = {worst:.2e}");
    }
    Ok(())
}
