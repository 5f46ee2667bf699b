use rug::Integer;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("digit word {0} is not admissible (digits must be positive and non-decreasing)")]
    NotAdmissible(String),

    #[error("operation needs a nonempty digit word")]
    EmptyWord,

    /// An enumeration would visit more objects than the caller allowed.
    #[error("enumeration of {count} words exceeds the budget of {budget}")]
    BudgetExceeded { count: Integer, budget: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no trial produced a certified digit prefix ({uncertified} uncertified)")]
    NoCertifiedTrials { uncertified: u64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
