//! Exit-code discipline: 0 success, 1 usage error, 2 failure (including
//! partial failure, where some input files were skipped).

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: wrong flags, empty feature set, missing or
    /// unsuitable inputs. Exit code 1.
    Usage(String),
    /// Everything else. Exit code 2.
    Run(anyhow::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Run(err) => write!(f, "error: {err:#}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(err: E) -> Self {
        CliError::Run(err.into())
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;

/// Whether any per-file failures were tolerated along the way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Partial,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Clean => 0,
            Outcome::Partial => 2,
        }
    }

    pub fn and(self, other: Outcome) -> Outcome {
        if self == Outcome::Partial || other == Outcome::Partial {
            Outcome::Partial
        } else {
            Outcome::Clean
        }
    }
}
