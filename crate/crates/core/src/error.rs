//! Shared error type for all core operations.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("directed cycle: {}", .witness.join(" -> "))]
    Cycle { witness: Vec<String> },
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("edge endpoint `{0}` is not a declared node")]
    UnknownEndpoint(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("sets must be pairwise disjoint; `{0}` appears in more than one")]
    OverlappingSets(String),
    #[error("{0}")]
    UnsupportedSetSize(String),
    #[error("malformed proof: {0}")]
    MalformedProof(String),
    #[error("invalid search budget: {0}")]
    InvalidBudget(String),
    #[error("conditioning on a zero-probability event: {0}")]
    ZeroProbability(String),
    #[error("no binding for free variable `{0}`")]
    MissingBinding(String),
    #[error("estimands have incompatible free variables: {0}")]
    IncompatibleFreeVariables(String),
    #[error("value `{value}` is not in the domain of `{var}`")]
    OutOfDomainValue { var: String, value: String },
    #[error("invalid SCM: {0}")]
    InvalidScm(String),
    #[error("invalid collection: {0}")]
    InvalidCollection(String),
    #[error("expression parse error at {line}:{col}: {msg}")]
    ExprParse { line: usize, col: usize, msg: String },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
