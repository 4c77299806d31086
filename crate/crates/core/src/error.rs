//! Error type shared across the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Column declaration problems: duplicate names, missing task-id or
    /// target column, header/schema mismatch.
    #[error("schema error: {0}")]
    Schema(String),

    /// Data-content problems: empty datasets, rows that cannot be used.
    #[error("data error: {0}")]
    Data(String),

    /// Invalid caller-supplied parameter (fold count, cluster count, ...).
    #[error("parameter error: {0}")]
    Param(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A metric is undefined for the given input (e.g. R^2 on constant targets).
    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("unknown task: {0}")]
    UnknownTask(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    /// Solver produced a non-finite value; `objectives` holds the objective
    /// history up to the failure for diagnosis.
    #[error("numeric failure: {message}")]
    Numeric { message: String, objectives: Vec<f64> },

    /// Wraps a failure inside the cross-validation loop with its location.
    #[error("replication {replication}, fold {fold}: {source}")]
    Fold {
        replication: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_fold(self, replication: usize, fold: usize) -> Error {
        Error::Fold {
            replication,
            fold,
            source: Box::new(self),
        }
    }
}
