use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    /// Two independent routes to the same quantity disagree; signals a bug.
    #[error("internal consistency failure in {what}: discrepancy {discrepancy:e} exceeds {tolerance:e}")]
    Inconsistent {
        what: &'static str,
        discrepancy: f64,
        tolerance: f64,
    },

    #[error("numerical failure in {what}: residual {residual:e}")]
    Numerical { what: &'static str, residual: f64 },

    #[error("state space too large: n = {n} exceeds {max}")]
    TooLarge { n: usize, max: usize },

    #[error("no positive root of tanh(beta x) = x for beta = {beta} <= 1")]
    NoPositiveRoot { beta: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
