use thiserror::Error;

use crate::poly::Basis;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: M={0} vs M={1}")]
    DimensionMismatch(usize, usize),

    #[error("basis mismatch: {0} vs {1}")]
    BasisMismatch(Basis, Basis),

    #[error("truncation mismatch: T={0} vs T={1}")]
    TruncationMismatch(usize, usize),

    #[error("operation requires the {expected} basis, found {found}")]
    WrongBasis { expected: Basis, found: Basis },

    #[error("polynomial has a nonzero component of charge {0:?}")]
    ChargedComponent(Vec<i64>),

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("connection is not symmetric at indices {0:?}")]
    AsymmetricConnection([usize; 3]),

    #[error("two-form is not closed: d(w) component {index:?} = {residual}")]
    NotClosed { index: [usize; 3], residual: String },

    #[error("resonance: charge {0:?} lies in the kernel of the bracket with h")]
    Resonance(Vec<i64>),

    #[error("non-polynomial correction: charge {0:?} component is not divisible by its frequency factor")]
    NonPolynomialCorrection(Vec<i64>),

    #[error("s'Darboux set valid only through order {found:?}, need defect order >= {needed}")]
    InsufficientOrder { needed: usize, found: Option<usize> },

    #[error("number symbols do not star-commute (defect at order {0})")]
    NonCommuting(usize),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("oracle: {0}")]
    Oracle(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
