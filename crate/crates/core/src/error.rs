//! Error type shared by every module in the crate.

use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum Error {
    /// An argument is outside the domain an operation is defined on.
    Domain(String),
    /// An exact computation was asked to run past the configured step ceiling.
    StepLimit { n: usize, limit: usize },
    /// An alternating sum lost more significant digits than the budget allows.
    PrecisionExhausted { cancellation_digits: f64 },
    /// A tolerance-driven computation finished without reaching the target.
    ToleranceNotMet { requested: f64, achieved: f64 },
    /// A file write failed; the path is the intended destination.
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::StepLimit { n, limit } => write!(
                f,
                "exact step limit exceeded: n = {n} but limit is {limit} \
                 (raise BIRTHCHAIN_EXACT_LIMIT to override)"
            ),
            Error::PrecisionExhausted { cancellation_digits } => write!(
                f,
                "precision exhausted: alternating sum cancels {cancellation_digits:.1} \
                 decimal digits, more than double precision can absorb"
            ),
            Error::ToleranceNotMet { requested, achieved } => write!(
                f,
                "tolerance not met: requested {requested:e}, achieved {achieved:e}"
            ),
            Error::Io { path, source } => {
                write!(f, "i/o error writing {}: {source}", path.display())
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
