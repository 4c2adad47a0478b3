use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unbound variable ${index} at byte {pos}")]
    Unbound { index: usize, pos: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("cannot parse type `{0}`")]
    Parse(String),
    #[error("cannot unify {0} with {1}")]
    Mismatch(String, String),
    #[error("occurs check failed: {0} in {1}")]
    Occurs(String, String),
    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("unbound variable ${0}")]
    Unbound(usize),
    #[error("term is not in eta-long form: {0}")]
    NotEtaLong(String),
    #[error("`{0}` is not legal here")]
    Illegal(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("step limit of {0} exceeded")]
    StepLimit(u64),
    #[error("recursion depth limit of {0} exceeded")]
    DepthLimit(usize),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("unbound variable ${0}")]
    Unbound(usize),
    #[error("applied a non-function value")]
    NotAFunction,
    #[error("expected a data value, found a function")]
    NotData,
}

impl EvalError {
    pub fn runtime(msg: impl Into<String>) -> Self {
        EvalError::Runtime(msg.into())
    }
}

/// Top-level error for fallible operations that cross module boundaries.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("recognition model built for grammar version {model}, grammar is at {grammar}")]
    VersionMismatch { model: u64, grammar: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid data: {0}")]
    Data(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
