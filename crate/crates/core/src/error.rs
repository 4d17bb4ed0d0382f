use thiserror::Error;

/// Errors raised by model construction, inference and the experiment harnesses.
#[derive(Debug, Error)]
pub enum Error {
    /// Graph or model structure is malformed (asymmetric J, self-loop, duplicate edge, ...).
    #[error("structural error: {0}")]
    Structure(String),

    /// A value lies outside the admissible domain (nonpositive probability, unknown label, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An algorithm parameter is out of range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Exhaustive enumeration would exceed the configured size guard.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A message entry fell below the degeneracy floor after normalization.
    #[error("degenerate message on directed edge {from} -> {to}")]
    DegenerateMessage { from: usize, to: usize },

    /// An iterative numerical routine failed to reach its tolerance.
    #[error("numerical error: {message} (last iterate {last_value})")]
    Numerical { message: String, last_value: f64 },

    /// Certified sampling gave up.
    #[error("sampling exhausted after {attempts} attempts (last lambda* = {last_lambda})")]
    SamplingExhausted { attempts: usize, last_lambda: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
