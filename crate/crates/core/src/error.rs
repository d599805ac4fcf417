use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A level list violates the strictly-increasing / finite contract.
    #[error("invalid level sequence: {0}")]
    InvalidLevels(String),

    /// An operation produced too little output to be meaningful.
    #[error("degenerate output: {0}")]
    Degenerate(String),

    /// A numerical procedure failed (rank deficiency, lost precision, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A statistic is undefined for the given data.
    #[error("undefined: {0}")]
    Undefined(String),

    /// An iterative solver hit its iteration cap.
    #[error("no convergence after {iterations} iterations (last iterate {last:?})")]
    NoConvergence { iterations: usize, last: Vec<f64> },

    /// A fit objective is too flat to locate a minimum.
    #[error("parameter not identifiable: {0}")]
    Unidentifiable(String),

    /// A fit failed; the histogram it was fed is attached for diagnosis.
    #[error("fit of the order-{order} spacing histogram failed: {source}")]
    HistogramFit {
        order: usize,
        histogram: Box<crate::StatCurve>,
        #[source]
        source: Box<Error>,
    },

    /// Failure inside one realization of an ensemble.
    #[error("realization {index}: {source}")]
    Realization {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
