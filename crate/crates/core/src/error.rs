use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),
    #[error("parameter outside domain: {0}")]
    Domain(String),
    #[error("unknown catalog id: {0}")]
    UnknownId(String),
    #[error("lp solver failure: {0}")]
    Solver(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid polytope spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
