use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("schema: {0}")]
    Schema(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown access method `{0}`")]
    UnknownMethod(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("query: {0}")]
    Query(String),
    #[error("invalid path: {0}")]
    Path(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("budget: {0}")]
    Budget(String),
    #[error("limit exceeded: {0}")]
    Cap(String),
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
