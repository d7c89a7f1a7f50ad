//! Crate-wide error type and exit-code mapping for the CLI.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, UldaError>;

#[derive(Debug, Error)]
pub enum UldaError {
    #[error("empty sequence")]
    EmptySequence,

    #[error("frame {frame}: label {label} outside [{min}, {max}] and clamping is disabled")]
    LabelOutOfRange {
        frame: usize,
        label: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid binning: {0}")]
    InvalidBinning(String),

    #[error("kernel narrower than one bin (kernel size {kernel_size}, bin width {bin_width})")]
    KernelNarrowerThanBin { kernel_size: f64, bin_width: f64 },

    #[error("histograms use different binnings")]
    BinningMismatch,

    #[error("no frames at label bin {bin}")]
    NoFramesAtLabel { bin: usize },

    #[error("plan/sequence mismatch: plan demands new samples at bin {bin} but the sequence has no frames there")]
    PlanMismatch { bin: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {context} (expected {expected}, got {actual})")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("degenerate covariance: Cholesky factorization failed even after adding {lambda:e} to the diagonal")]
    DegenerateCovariance { lambda: f64 },

    #[error("degenerate correlation: input has zero variance")]
    DegenerateCorrelation,

    #[error("singular normal equations; use a positive ridge penalty")]
    SingularSystem,

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl UldaError {
    /// Process exit code for the CLI: 1 usage, 2 data error, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            UldaError::InvalidParameter(_) | UldaError::InvalidBinning(_) => 1,
            UldaError::DegenerateCovariance { .. }
            | UldaError::DegenerateCorrelation
            | UldaError::SingularSystem
            | UldaError::DegenerateWeights(_) => 3,
            _ => 2,
        }
    }
}
