use num_bigint::BigInt;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval: lo = {lo} exceeds hi = {hi}")]
    InvalidInterval { lo: String, hi: String },

    #[error("point budget exceeded: the window may hold up to {required} points but the budget is {budget}")]
    BudgetExceeded { required: BigInt, budget: u64 },

    #[error("precision underflow: {required_bits} bits needed but only {available_bits} available")]
    PrecisionUnderflow { required_bits: u64, available_bits: u64 },

    #[error("window [{lo}, {hi}] holds fewer than two points")]
    InsufficientWindow { lo: String, hi: String },

    #[error("psi vanishes on every residue class modulo {modulus} within the budget")]
    DegeneratePsi { modulus: u64 },

    #[error("ratio is undefined: {0}")]
    UndefinedRatio(String),

    #[error("a pair of distinct indices is required, got m = n = {0}")]
    InvalidPair(u64),

    #[error("index {index} exceeds N_max = {n_max}")]
    IndexOutOfRange { index: u64, n_max: u64 },

    #[error("cannot parse number {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn parse(input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            input: input.to_string(),
            reason: reason.into(),
        }
    }

    /// Errors caused by the size of the requested computation rather than by
    /// bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. } | Error::PrecisionUnderflow { .. }
        )
    }
}
