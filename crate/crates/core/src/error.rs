use thiserror::Error;

/// Errors produced by the numerical kernels and experiment plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("state diverged (non-finite) at step {step}")]
    Divergence { step: usize },

    #[error("no convergence after {iterations} iterations (last distance {last:.3e})")]
    Convergence {
        iterations: usize,
        last: f64,
        trace: Vec<f64>,
    },

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("transport solver failed: {0}")]
    Solver(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
