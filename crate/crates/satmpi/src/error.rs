//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by geometry, rendering, fitting, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A rational-camera denominator fell below the validity guard.
    #[error("RPC denominator near zero at batch index {index} (|den| = {value:.3e})")]
    DenominatorNearZero { index: usize, value: f64 },

    /// Iterative localization failed to converge within the iteration budget.
    #[error("localization did not converge at index {index} (residual {residual:.3e})")]
    NoConvergence { index: usize, residual: f64 },

    /// Text input could not be parsed.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// A constructed value violates a structural invariant.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// An altitude range or plane count is unusable.
    #[error("invalid range: {0}")]
    InvalidRange(String),

    /// Array dimensions disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A masked reduction has no valid pixels.
    #[error("empty mask: no valid pixels")]
    EmptyMask,

    /// An affine view parameterization is degenerate.
    #[error("singular view: {0}")]
    SingularView(String),

    /// The optimization produced a non-finite loss.
    #[error("divergence at iteration {iteration}: total loss is not finite")]
    Divergence { iteration: usize },

    /// DSM gridding produced no occupied cells.
    #[error("empty output: no pixel landed in the target grid")]
    EmptyOutput,

    /// Raster dimensions disagree with the declared header.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Underlying filesystem failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON manifest.
    #[error("manifest error: {0}")]
    Manifest(#[from] serde_json::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
