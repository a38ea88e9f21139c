use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a mathematical precondition (negative employment,
    /// non-positive tightness, and so on).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver exhausted its iteration budget.
    #[error("solver failed after {iterations} iterations (residual norm {residual_norm:.3e})")]
    NoConvergence {
        iterations: usize,
        residual_norm: f64,
        /// Last iterate, for post-mortem inspection.
        last_iterate: Vec<f64>,
    },

    /// Vector/matrix dimensions disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A policy has no stationary point on its grid.
    #[error("no stationary point: {0}")]
    NoStationaryPoint(String),

    /// An environment was stepped past its horizon.
    #[error("episode is done; call reset before stepping again")]
    EpisodeDone,

    /// Sampling from an empty replay buffer.
    #[error("replay buffer is empty")]
    EmptyBuffer,

    /// Configuration file / override problems.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
