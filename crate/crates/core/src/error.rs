use thiserror::Error;

use crate::monomial::Monomial;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("arity must be at least 1")]
    ZeroArity,

    #[error("index set is empty")]
    EmptyIndexSet,

    #[error("polynomial has no nonzero coefficient")]
    ZeroPolynomial,

    #[error("monomial {0} exceeds the degree cap (per-variable 16, total 32)")]
    DegreeCap(Monomial),

    #[error("capacity exceeded: {size} monomials (limit {limit})")]
    Capacity { size: usize, limit: usize },

    #[error("binomial coefficient overflow while expanding {0}")]
    BinomialOverflow(Monomial),

    #[error("non-finite design matrix entry for monomial {monomial} at row {row}")]
    NonFinite { monomial: Monomial, row: usize },

    #[error("no unique solution: {0}")]
    NoUniqueSolution(String),

    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    #[error("condition not met: {0}")]
    ConditionNotMet(String),

    #[error("condition satisfied; search vacuous")]
    SearchVacuous,

    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
