use thiserror::Error;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("lag {lag} out of range for series of length {len}")]
    Range { lag: usize, len: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("segment {segment} has zero standard deviation at scale {scale}")]
    DegenerateSegment { segment: usize, scale: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("underdetermined fit: scale {scale} too small for polynomial order {order}")]
    Underdetermined { scale: usize, order: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("study aborted: {failed} of {total} fits failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Error::Io(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
