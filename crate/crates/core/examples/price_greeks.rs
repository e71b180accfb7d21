//! Prices and greeks of a few payoffs in `(S, R, Σ)` coordinates, closed form
//! against quadrature.
//!
//! cargo run --release --example price_greeks

use robust_hedge::pricing::{Method, PricingKernel, QuadratureConfig};
use robust_hedge::{Payoff, PricingInputs};

fn main() -> robust_hedge::Result<()> {
    let auto = PricingKernel::new(QuadratureConfig::default(), Method::Auto)?;
    let quad = PricingKernel::new(QuadratureConfig::default(), Method::Quadrature)?;
    let payoffs = [
        ("call K=100", Payoff::call(100.0)?),
        ("put K=100", Payoff::put(100.0)?),
        ("straddle", Payoff::piecewise_linear(vec![(100.0, 0.0)], -1.0, 1.0)?),
        ("0.01·S²", Payoff::power(0.01, 2.0)?),
    ];
    let points = [(100.0, 0.0, 0.04), (90.0, 0.05, 0.09), (120.0, 0.02, 0.01)];
    for (name, f) in &payoffs {
        println!("{name}");
        for &(s, r, v) in &points {
            let x = PricingInputs::new(s, r, v)?;
            let g = auto.greeks(f, x)?;
            let q = quad.price(f, x)?;
            println!(
                "  S={s:<5} R={r:<4} Σ={v:<4}  P={:<19.15} quad-gap={:+.1e}  Δ={:.10} Γ={:.3e} ∂Σ={:.3e} ∂R={:.3e}",
                g.price,
                q - g.price,
                g.delta,
                g.gamma,
                g.d_sigma,
                g.d_r
            );
        }
    }
    Ok(())
}
