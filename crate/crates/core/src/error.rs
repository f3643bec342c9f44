use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("empty interval: lower bound {lower} exceeds upper bound {upper}")]
    EmptyInterval { lower: String, upper: String },

    #[error("invalid bound literal {literal:?}: {message}")]
    InvalidBound { literal: String, message: String },

    #[error("block length {block} out of range for a pattern of {len} bytes")]
    BlockLength { block: usize, len: usize },

    #[error("invalid filter configuration: {0}")]
    Config(String),

    #[error("design space holds {count} configurations, above the cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("invalid JSON at byte {position}: {message}")]
    Json { position: usize, message: String },

    #[error("invalid generator spec: {0}")]
    Generator(String),

    #[error("configuration `{config}` rejected {count} matching records")]
    FalseNegatives { config: String, count: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
