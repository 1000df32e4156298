use alloc::string::String;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no records to build from")]
    EmptyInput,
    #[error("attribute `{0}` has no non-missing values")]
    AllMissing(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("row {row}: item id {item} out of range for {n_items} items")]
    ItemOutOfRange {
        row: usize,
        item: u32,
        n_items: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("row {row}: alpha and beta are both set")]
    InvalidOutcome { row: usize },
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("target subgroup covers no instance of the stream")]
    EmptyCoverage,
    #[error("itemset of length {0} exceeds the exact Shapley limit of 12")]
    ItemsetTooLong(usize),
}

pub type Result<T> = core::result::Result<T, Error>;
