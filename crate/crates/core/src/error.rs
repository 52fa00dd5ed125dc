use thiserror::Error;

/// Errors raised across the model, analysis and IO layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no price can be formed: market received no {0}")]
    EmptySide(&'static str),

    #[error("market index {index} out of range for {markets} markets")]
    MarketIndex { index: usize, markets: usize },

    #[error("{0}")]
    InvalidParameter(String),

    #[error("buyer-to-seller ratio must be positive, got {0}")]
    NonPositiveRatio(f64),

    #[error("noise covariance is singular at ({x:.6}, {y:.6}): condition number {condition:.3e}")]
    SingularCovariance { x: f64, y: f64, condition: f64 },

    #[error("no transition found for 1/beta in [{lo}, {hi}]")]
    NoTransition { lo: f64, hi: f64 },

    #[error("numerical procedure did not converge: {0}")]
    NonConvergence(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
