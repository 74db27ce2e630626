//! Crate-wide error type.

/// Errors surfaced by model operations, solvers, estimators and the
/// experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An operation that averages over samples received an empty data set.
    #[error("data set is empty")]
    EmptyData,

    /// A symmetric solve hit a pivot at or below the positive-definiteness
    /// threshold (for example a normal matrix built from fewer samples than
    /// dimensions).
    #[error("matrix is not positive definite (pivot {pivot:.3e} at column {column})")]
    NotPositiveDefinite { column: usize, pivot: f64 },

    /// Sample splitting was asked for more batches than there are samples.
    #[error("cannot split {n} samples into {batches} non-empty batches")]
    BatchTooSmall { n: usize, batches: usize },

    /// A curve fit needs more points than the input provides.
    #[error("{context}: need at least {needed} usable points, got {got}")]
    TooFewPoints {
        context: &'static str,
        needed: usize,
        got: usize,
    },

    /// A solver configuration violates its own invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A CSV input lacks a column that a plot specification refers to.
    #[error("column {column:?} not found in {path}")]
    MissingColumn { column: String, path: String },

    /// A CSV input has a header but no data rows.
    #[error("no data rows in {0}")]
    EmptyCsv(String),

    /// Any I/O failure while reading or writing experiment artifacts.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
