use thiserror::Error;

pub type Result<T> = std::result::Result<T, ClgError>;

#[derive(Debug, Error)]
pub enum ClgError {
    /// Caller supplied arguments outside an operation's domain.
    #[error("usage error: {0}")]
    Usage(String),

    /// A documented precondition of a state transition was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input outside the domain of a closed-form expression.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Not enough data for a fit or estimator.
    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ClgError {
    pub fn usage(msg: impl Into<String>) -> Self {
        ClgError::Usage(msg.into())
    }

    pub fn insufficient(msg: impl Into<String>) -> Self {
        ClgError::Insufficient(msg.into())
    }
}
