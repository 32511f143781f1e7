use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("grid mismatch: expected L={expected_len}, n={expected_n}; got L={found_len}, n={found_n}")]
    GridMismatch {
        expected_len: f64,
        expected_n: usize,
        found_len: f64,
        found_n: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("potential support radius {support} exceeds half the box ({half_box})")]
    SupportTooLarge { support: f64, half_box: f64 },

    #[error("shooting bracket failure: {0}")]
    Bracket(String),

    #[error("basis dimension {dim} exceeds the cap {cap}")]
    BasisTooLarge { dim: usize, cap: usize },

    #[error("two-body kernel is not symmetric under pair exchange (residual {residual:e})")]
    AsymmetricKernel { residual: f64 },

    #[error("propagation failed: {0}")]
    Propagation(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("incompatible states: {0}")]
    Incompatible(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> LabError {
    LabError::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
