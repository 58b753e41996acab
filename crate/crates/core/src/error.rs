use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("action `{action}` is not available in state `{state}`")]
    UnavailableAction { state: String, action: String },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("scripted resolver ran out of choices after {0} steps")]
    ResolverExhausted(usize),

    #[error("not a trajectory: {0}")]
    NotATrajectory(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown letter `{0}`")]
    UnknownLetter(String),

    #[error("size budget exceeded: {what} needs more than {budget} states")]
    SizeBudgetExceeded { what: &'static str, budget: usize },

    #[error("invalid class: {0}")]
    InvalidClass(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("not LTL-expressible: {0}")]
    NotLtlExpressible(String),

    #[error("semantic error: {0}")]
    Semantic(String),

    #[error("initial value {value} of `{var}` is outside its declared range")]
    OutOfRange { var: String, value: u64 },

    #[error("bound {bound} is smaller than initial value {value} of `{var}`")]
    BoundTooSmall { var: String, value: u64, bound: u64 },

    #[error("QNP is not closure-eligible: {0}")]
    NotClosureEligible(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(pos: usize, msg: impl Into<String>) -> Self {
        Error::Parse { pos, msg: msg.into() }
    }
}
