use std::fmt;

/// Failure classes of a run, each with its own exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, config keys or parameter values. Exit status 1.
    Usage(String),
    /// The analysis itself failed. Exit status 2.
    Compute(String),
    /// Reading input or writing output failed. Exit status 3.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Compute(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    /// A parameter rejected by a module's own validation before any work.
    pub fn usage(e: dfakit_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(m) => write!(f, "computation error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dfakit_core::Error> for CliError {
    fn from(e: dfakit_core::Error) -> Self {
        match e {
            dfakit_core::Error::Io(_) | dfakit_core::Error::Parse(_) => CliError::Io(e.to_string()),
            other => CliError::Compute(other.to_string()),
        }
    }
}
