use thiserror::Error;

use crate::expr::SyntaxError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("event constrains coordinate {depth} but the table has only {rows} rows")]
    DepthExceedsTable { depth: usize, rows: usize },
    #[error("event sets belong to different arenas")]
    ArenaMismatch,
    #[error("set has an unconstrained tail; a plane length must be supplied")]
    UnboundedDecomposition,
    #[error("symbol {0} out of range 0..6")]
    InvalidSymbol(u64),
    #[error("plane word must contain at least one letter")]
    EmptyPlaneWord,
    #[error("invalid probability table: {0}")]
    InvalidTable(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("probability p({symbol}) = {value} after step {step} leaves [0,1]")]
    ProbabilityOverflow { step: usize, symbol: usize, value: String },
    #[error("cannot parse rational {0:?}")]
    ParseRational(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}
