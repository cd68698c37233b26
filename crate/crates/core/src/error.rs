use thiserror::Error;

use crate::seqopt::OptimizeTrace;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An index (qubit, gate, DOF) fell outside its valid range.
    #[error("index error: {0}")]
    Index(String),

    /// An input violated a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A factorization or eigensolve could not be completed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// `f† v̂` vanished, so `v̂` cannot be the nonzero-eigenvalue eigenvector.
    #[error("degenerate overlap |f†v| = {0:e}")]
    DegenerateOverlap(f64),

    /// The optimizer produced a non-finite objective estimate.
    #[error("non-finite objective at iteration {}, gate {}", .trace.iterations, .gate)]
    NonFinite { gate: usize, trace: Box<OptimizeTrace> },

    /// A banded-matrix file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that stem from a numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::DegenerateOverlap(_) | Error::NonFinite { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
