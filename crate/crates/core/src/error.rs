use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("probability vector entry {index} is invalid: {reason}")]
    InvalidProbVector { index: usize, reason: String },

    #[error("probability vector sums to {sum}, expected 1 within {tolerance}")]
    ProbVectorSum { sum: f64, tolerance: f64 },

    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("alignment error: missing ids {missing:?}, extra ids {extra:?}")]
    Alignment { missing: Vec<String>, extra: Vec<String> },

    #[error("duplicate image id `{0}`")]
    DuplicateId(String),

    #[error("row count mismatch: `{first}` has {first_rows} rows, `{second}` has {second_rows}")]
    RowCountMismatch {
        first: String,
        first_rows: usize,
        second: String,
        second_rows: usize,
    },

    #[error("undefined metric {metric}: {reason}")]
    UndefinedMetric { metric: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("augmentation error: {0}")]
    Augmentation(String),

    #[error("image `{0}` not found")]
    ImageNotFound(String),

    #[error("sink error: {0}")]
    Sink(String),

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn undefined(metric: &str, reason: &str) -> Self {
        Error::UndefinedMetric {
            metric: metric.into(),
            reason: reason.into(),
        }
    }

    /// Wraps the error with a prefix such as a classifier id or report cell name.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable category used by the command line error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidProbVector { .. } | Error::ProbVectorSum { .. } => "validation",
            Error::ClassOutOfRange { .. } => "validation",
            Error::Usage(_) => "usage",
            Error::Degenerate(_) => "degenerate",
            Error::Alignment { .. } | Error::DuplicateId(_) => "alignment",
            Error::RowCountMismatch { .. } => "ingestion",
            Error::UndefinedMetric { .. } => "undefined_metric",
            Error::Config(_) => "config",
            Error::Augmentation(_) | Error::ImageNotFound(_) | Error::Sink(_) => "augmentation",
            Error::Context { source, .. } => source.kind(),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
