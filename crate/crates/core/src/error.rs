use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("line {line}: malformed JSON: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("line {line}: vector has dimension {got}, expected {expected}")]
    DimensionMismatchAtLine {
        line: usize,
        expected: usize,
        got: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("line {line}: vector dimension {got} is below the minimum of 2")]
    DimensionTooSmall { line: usize, got: usize },

    #[error("zero-norm vector for id {id:?}")]
    ZeroNorm { id: String },

    #[error("non-finite value in vector for id {id:?}")]
    NonFinite { id: String },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("record {0:?} has no year")]
    MissingYearField(String),

    #[error("year {0} is missing from the anchor set")]
    MissingYear(i32),

    #[error("year {0} appears more than once")]
    DuplicateYear(i32),

    #[error("invalid year range {y_min}..={y_max}")]
    InvalidYearRange { y_min: i32, y_max: i32 },

    #[error("projection row {row}: {message}")]
    MalformedProjection { row: usize, message: String },

    #[error("projection years are not contiguous: {0} is missing")]
    NonContiguousYears(i32),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("all eigenvalues below threshold {threshold:e} (largest {largest:e})")]
    DegenerateKernel { threshold: f64, largest: f64 },

    #[error("zero rank variance")]
    ZeroVariance,

    #[error("inputs are not permutations of each other")]
    NotPermutation,

    #[error("unknown prediction id {0:?}")]
    UnknownId(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
