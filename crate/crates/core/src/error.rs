//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A model constructor was handed parameters outside its domain.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Quantile argument outside the open unit interval.
    #[error("probability argument u={0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),

    /// A quantile or integral evaluation produced a non-finite value.
    #[error("non-finite result in {context}: {value}")]
    NonFinite { context: &'static str, value: f64 },

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureFailed(String),

    /// Window indices violate 1 <= ell < k < n or related preconditions.
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    /// Tied order statistics make a ratio statistic degenerate.
    #[error("degenerate window: {0}")]
    DegenerateWindow(String),

    /// A statistic that needs the upper endpoint was requested without one.
    #[error("upper endpoint y0 required but not supplied")]
    MissingUpperEndpoint,

    /// Sample construction failed (size, ordering, or support violations).
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// Bad experiment configuration (replicates, rates, target mismatch).
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    /// Too many replicates were excluded as degenerate.
    #[error("experiment failed: {0}")]
    ExperimentFailed(String),

    /// An argument outside the documented domain of a closed form.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
