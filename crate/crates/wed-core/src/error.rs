use thiserror::Error;

/// Errors produced by grid construction, problem assembly, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value (grid too coarse, non-positive step, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Mismatched vector or trajectory sizes.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Argument outside the domain of an operation (time out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation produced a non-finite value.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Newton iteration failed to reduce the residual.
    #[error("solver divergence: {message}")]
    SolverDivergence {
        message: String,
        /// Residual norms per iteration, for post-mortem inspection.
        residual_history: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
