use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("phase {value:e} out of supported range (must stay below {limit:e})")]
    OutOfRange { value: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size guard: {what} = {got} exceeds limit {limit}")]
    SizeGuard {
        what: &'static str,
        got: u64,
        limit: u64,
    },

    #[error("K too small: need K >= {required} for tails below {tolerance:e}")]
    KTooSmall { required: u64, tolerance: f64 },

    #[error(
        "N = {n} is not a perfect {gamma}-th power; nearest admissible values: {}",
        suggestions.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
    )]
    NotPerfectPower {
        n: u64,
        gamma: u32,
        suggestions: Vec<u64>,
    },

    #[error("growth condition violated: {0}")]
    GrowthCondition(String),

    #[error("hypothesis violated at s = {index}: |b_s - b_(s+1)| = {diff:e} > T/s = {allowed:e}")]
    Hypothesis { index: u64, diff: f64, allowed: f64 },

    #[error("beta verification failed: closed form {closed_form:e}, alternative {alternative:e}, measured {measured:e}")]
    BetaMismatch {
        closed_form: f64,
        alternative: f64,
        measured: f64,
    },

    #[error("truncation tail {tail:e} exceeds budget {budget:e}; need K >= {required}")]
    TruncationBudget { tail: f64, budget: f64, required: u64 },

    #[error("i/o: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
