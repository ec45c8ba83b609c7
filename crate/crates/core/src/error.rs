//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural precondition on the input data was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative numerical procedure failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Exponent spread exceeded the overflow budget; apply the centering
    /// shift before retrying.
    #[error("overflow guard: {0}")]
    Overflow(String),

    /// Two objects that must share a convention or frame do not.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The bridge-weight positivity certificate failed; `suggested_c` is the
    /// smallest convexity constant that passes on the check grid.
    #[error("positivity certificate failed (c = {c}); smallest passing c on the grid is {suggested_c}")]
    Positivity { c: f64, suggested_c: f64 },

    /// Invalid experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
