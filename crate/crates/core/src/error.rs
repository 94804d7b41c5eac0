use std::path::PathBuf;

use crate::signal::PdLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// First invariant violation found in a magnitude matrix.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("phase count {found} ≠ {expected}")]
    PhaseCount { found: usize, expected: usize },
    #[error("cycle count {found} ≠ {expected}")]
    CycleCount { found: usize, expected: usize },
    #[error("need at least 2 phases and 1 cycle, got {phases}×{cycles}")]
    TooSmall { phases: usize, cycles: usize },
    #[error("expected {expected} magnitudes, got {found}")]
    ValueCount { found: usize, expected: usize },
    #[error("negative value at phase {phase}, cycle {cycle}")]
    Negative { phase: usize, cycle: usize },
    #[error("non-finite value at phase {phase}, cycle {cycle}")]
    NonFinite { phase: usize, cycle: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("row {row}: {source}")]
    InvalidRow {
        row: usize,
        #[source]
        source: ValidationError,
    },
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("row {row}: unknown label {token:?}")]
    UnknownLabel { row: usize, token: String },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("training requires labels (sample {id:?} is unlabeled)")]
    MissingLabels { id: String },
    #[error("no sample with id {0:?}")]
    UnknownId(String),
    #[error("dataset is empty")]
    EmptyData,
    #[error("all samples have dimensions {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("max magnitude needs at least 3 points, signal has {0}")]
    TooFewPoints(usize),
    #[error("threshold ratio must lie strictly between 0 and 1, got {0}")]
    InvalidThreshold(f64),
    #[error("training data contains a single class ({0:?}); at least two are required")]
    SingleClass(PdLabel),
    #[error("class {label:?} has {count} samples, need at least {needed}")]
    InsufficientClassSamples {
        label: PdLabel,
        count: usize,
        needed: usize,
    },
    #[error("feature width {found} does not match the fitted width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("SMO did not converge within {iterations} iterations (optimality gap {gap:.3e})")]
    NoConvergence { iterations: usize, gap: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of a numerical procedure rather than of its inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. })
    }
}
