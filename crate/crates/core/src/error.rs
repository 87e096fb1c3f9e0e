//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// All four confusion counts are zero; no rate is defined.
    #[error("empty evaluation: all confusion counts are zero")]
    EmptyEvaluation,

    /// Two arrays that must have equal lengths do not.
    #[error("length mismatch: {left} vs {right} elements")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty batch")]
    EmptyBatch,

    #[error("nothing to perturb: empty feature vector or no perturbable indices")]
    NothingToPerturb,

    #[error("could not reach minimum deviation {tau} after {attempts} attempts")]
    DeviationUnreachable { tau: f64, attempts: u32 },

    #[error("profile too small: {count} vectors (minimum {min})")]
    ProfileTooSmall { count: usize, min: usize },

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    TrainingDiverged { epoch: u32 },

    #[error("no viable detector: every candidate exceeds the overhead tolerance")]
    NoViableDetector,

    #[error("target ({x}, {y}) is unreachable for arm lengths {l1}, {l2}")]
    UnreachableTarget { x: f64, y: f64, l1: f64, l2: f64 },

    #[error("invalid option parameters: {0}")]
    InvalidOptionParams(String),

    #[error("image dimensions {width}x{height} are not multiples of {unit}")]
    BadImageDimensions {
        width: usize,
        height: usize,
        unit: usize,
    },

    #[error("malformed PGM: {0}")]
    MalformedPgm(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
