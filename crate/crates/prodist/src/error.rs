//! Error type shared by every numerical layer of the crate.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong below the IO layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Argument outside a function's mathematical domain.
    Domain(String),
    /// Distribution or configuration parameters violate an invariant.
    InvalidParameter(String),
    /// Malformed integration domain (empty interval, singular point on the
    /// boundary, non-finite interior point, ...).
    InvalidDomain(String),
    /// The integrand returned a non-finite value at an interior node even
    /// after bisecting the offending panel.
    InvalidIntegrand { at: f64 },
    /// The subdivision or iteration budget was exhausted before the requested
    /// tolerance was reached.
    NonConvergence { what: &'static str },
    /// The density diverges at the requested point (for example the Gaussian
    /// product density at `z = 0`).
    SingularPoint { at: f64 },
    /// Every optimizer start failed or diverged.
    AllStartsFailed,
    /// The operation is not defined for the given specification.
    Unsupported(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InvalidDomain(msg) => write!(f, "invalid integration domain: {msg}"),
            Error::InvalidIntegrand { at } => {
                write!(f, "integrand returned a non-finite value near x = {at}")
            }
            Error::NonConvergence { what } => write!(f, "failed to converge: {what}"),
            Error::SingularPoint { at } => write!(f, "density is singular at z = {at}"),
            Error::AllStartsFailed => write!(f, "all optimizer starts failed"),
            Error::Unsupported(msg) => write!(f, "unsupported operation: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
