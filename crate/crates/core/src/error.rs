use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("pair {index} out of range: {message}")]
    PairOutOfRange { index: usize, message: String },

    #[error("unsupported alphabet: correlators need binary outcomes, got d_A={outcomes_a}, d_B={outcomes_b}")]
    UnsupportedAlphabet { outcomes_a: usize, outcomes_b: usize },

    #[error("missing setting pair (a={a}, b={b})")]
    MissingSettingPair { a: usize, b: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("numerical stall: {0}")]
    NumericalStall(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
