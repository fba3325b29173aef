use thiserror::Error;

/// Errors produced by the structures and the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rank position {pos} out of range for bit vector of length {len}")]
    RankOutOfRange { pos: u64, len: u64 },

    #[error("select index {index} out of range (vector holds {ones} set bits)")]
    SelectOutOfRange { index: u64, ones: u64 },

    #[error("duplicate key {0}")]
    DuplicateKey(String),

    #[error("payload {payload} does not fit in {width} bits")]
    PayloadOverflow { payload: u64, width: u32 },

    #[error("keys must be strictly increasing (violation at index {index})")]
    Unsorted { index: usize },

    #[error("key {key} is outside the universe [0..{universe})")]
    KeyOutOfUniverse { key: u64, universe: u128 },

    #[error("query on an empty structure")]
    EmptyStructure,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("construction failed: {0}")]
    BuildFailed(String),

    #[error("malformed serialized data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
