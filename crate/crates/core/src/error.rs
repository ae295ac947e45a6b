use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("not a number: {0:?}")]
    Number(String),

    #[error("malformed ranking: {0}")]
    Ranking(String),

    #[error("negative weight {0}")]
    NegativeWeight(String),

    #[error("weight sum out of tolerance: {0} is not within 1e-4 of 1")]
    WeightSum(String),

    #[error("candidate {0} out of range")]
    UnknownCandidate(String),

    /// A violated operation precondition; the message names it.
    #[error("{0}")]
    Precondition(String),

    #[error("partition enumeration is capped at {cap} candidates, profile has {m}")]
    PartitionCap { cap: usize, m: usize },

    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: String, hi: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
