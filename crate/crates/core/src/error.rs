use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The hard-instance parameters fall outside the range where the construction is valid.
    #[error("invalid construction: {0}")]
    ConstructionInvalid(String),

    /// A horizon scan did not terminate before its cap.
    #[error("horizon exceeds cap of {cap} iterations")]
    HorizonTooLarge { cap: u64 },

    /// Caller broke a documented usage contract (e.g. nonzero first momentum).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A precondition on the inputs of a check or bound does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn ensure_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{name} contains non-finite entries")))
    }
}
