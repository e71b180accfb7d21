//! Conservative delta hedging of convex and concave European payoffs under
//! uncertainty about the cumulative volatility, its discretization under
//! small linear transaction costs with hitting-time rebalancing dates, and a
//! Monte Carlo laboratory that checks the asymptotic behaviour of the
//! hedging error.

pub mod asymptotics;
pub mod cli;
pub mod config;
pub mod error;
pub mod hedge;
pub mod market;
pub mod math;
pub mod payoff;
pub mod pricing;

pub use error::{Error, Result};
pub use payoff::{Convexity, Payoff, PayoffKind};
pub use pricing::{GreekSet, PdeResiduals, PricingInputs, PricingKernel};
