//! Limit quantities and Monte Carlo convergence studies of the normalized
//! hedging error.

pub mod limits;
pub mod stats;
pub mod study;

pub use limits::{alpha_from_kappa0, beta, beta_hat, count_limit, limit_q, q_prefactor};
pub use study::{compare_leland, convergence_study, ConvergenceSpec, ExperimentReport, LelandReport, LelandSpec};
