use thiserror::Error;

use crate::semiring::Overflow;

/// Errors reported by analysis and evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A variable, atom, or relation does not fit the schema it is used with.
    #[error("schema error: {0}")]
    Schema(String),
    /// The query is cyclic or otherwise outside what the analysis supports.
    #[error("analysis error: {0}")]
    Analysis(String),
    /// A precondition of an evaluator was violated.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A tuning parameter is out of range.
    #[error("configuration error: {0}")]
    Config(String),
    /// The operation budget of a doubling round ran out.
    #[error("budget exhausted after {used} tuple operations (budget {budget})")]
    BudgetExhausted { used: u64, budget: u64 },
    #[error(transparent)]
    Overflow(#[from] Overflow),
    /// The brute-force oracle refused an instance above its candidate cap.
    #[error("oracle cap of {cap} candidate valuations exceeded")]
    OracleTooLarge { cap: u64 },
    /// The path evaluator was handed something that is not a path query.
    #[error("unsupported query shape: {0}")]
    UnsupportedShape(String),
    /// Generator parameters that cannot be realized.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
