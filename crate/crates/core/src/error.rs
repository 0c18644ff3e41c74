use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants are grouped so front ends can map them onto exit codes: shape and
/// parameter problems are usage errors, `CapExceeded` is a resource limit, and
/// `Verification` means an oracle disagreed with a protocol result.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown operator name `{0}`")]
    UnknownOperator(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not invertible or M*M_inv != I (deviation {0:.3e})")]
    NotInvertible(f64),

    #[error("Kraus operators are not complete (deviation {0:.3e})")]
    IncompleteKraus(f64),

    #[error("all outcome probabilities underflow; state is inconsistent")]
    ProbabilityUnderflow,

    #[error("{what} exceeds cap ({size} > {cap})")]
    CapExceeded { what: String, size: usize, cap: usize },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
