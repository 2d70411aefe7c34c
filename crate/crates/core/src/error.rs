use thiserror::Error;

use crate::rational::Rat;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("agent {agent} is not super-additive")]
    NotSuperadditive { agent: usize },

    #[error("agent {agent} is not single-minded")]
    NotSingleMinded { agent: usize },

    #[error("instance is not uniform budget-additive: {0}")]
    NotUniformBudgetAdditive(String),

    #[error("budgets are not identical (agent {agent} differs from agent 0)")]
    NotIdenticalBudgets { agent: usize },

    /// The allocation cannot be supported: the configuration LP over its
    /// bundles exceeds its welfare by `gap`.
    #[error("allocation is not MC-CWE: fractional optimum exceeds welfare by {gap}")]
    NotMccwe { gap: Rat },

    #[error("relative-demand query over an empty item pool")]
    EmptyPool,

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("invalid outcome: {0}")]
    InvalidOutcome(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// An exact LP certificate failed to check. Indicates a solver bug.
    #[error("LP certificate check failed: {0}")]
    Certificate(String),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
