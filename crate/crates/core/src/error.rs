use thiserror::Error;

/// Errors raised by the pricing kernel, the simulators and the hedging engines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Adaptive quadrature ran out of subdivisions (or the Gauss-Hermite
    /// order was too low) before meeting its tolerance.
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// The payoff has a region where gamma vanishes identically, so
    /// hitting-time rebalancing dates are not well defined.
    #[error("payoff violates the nonvanishing-gamma condition: {0}")]
    VanishingGamma(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
