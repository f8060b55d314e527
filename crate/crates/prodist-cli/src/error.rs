//! CLI error categories mapped onto process exit codes.

use std::fmt;

/// Exit codes: 2 usage/flag errors, 3 data errors, 4 numerical failures.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<prodist::Error> for CliError {
    fn from(e: prodist::Error) -> Self {
        use prodist::Error::*;
        match e {
            NonConvergence { .. } | InvalidIntegrand { .. } | SingularPoint { .. }
            | AllStartsFailed => CliError::Numeric(e.to_string()),
            Domain(_) | InvalidParameter(_) | InvalidDomain(_) | Unsupported(_) => {
                CliError::Usage(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
