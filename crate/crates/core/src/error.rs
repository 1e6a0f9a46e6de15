use thiserror::Error;

use crate::types::{Group, MethodId, Scale};

/// Errors raised by interval construction, data ingestion and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no strata supplied")]
    EmptyStrata,

    #[error("stratum {stratum} is missing the {group} group")]
    GroupMissing { stratum: usize, group: Group },

    #[error("invariant violated: {field}: {detail}")]
    InvariantViolation { field: String, detail: String },

    #[error("minimum-risk weights need at least two strata, got {0}")]
    MrStrataCount(usize),

    #[error("minimum-risk weight for stratum {stratum} is negative ({weight:.6})")]
    NegativeWeight { stratum: usize, weight: f64 },

    #[error("estimate {estimate} lies outside its interval [{lower}, {upper}]")]
    MalformedInterval { estimate: f64, lower: f64, upper: f64 },

    #[error("all stratum variances are zero")]
    AllZeroVariances,

    #[error("stratum variances are degenerate (all zero)")]
    DegenerateVariance,

    #[error("cannot re-level the interval for stratum {stratum}, {group} group, to level {level}")]
    RefitUnavailable { stratum: usize, group: Group, level: f64 },

    #[error("both pooled estimates are zero; ratio undefined")]
    ZeroDenominator,

    #[error("log-scale interval needs positive estimates and limits: {0}")]
    NonpositiveEstimate(String),

    #[error("pooled event rate is zero in the {0} group")]
    ZeroPooledRate(Group),

    #[error("bisection failed to converge: bracket [{lo}, {hi}], residual {residual:e}")]
    NoConvergence { lo: f64, hi: f64, residual: f64 },

    #[error("incomputable: {0}")]
    Incomputable(String),

    #[error("{method} is not available on the {scale} scale")]
    UnsupportedMethod { method: MethodId, scale: Scale },

    #[error("no subjects in stratum {stratum}, {group} group")]
    EmptyGroup { stratum: usize, group: Group },

    #[error("time {time} lies beyond follow-up (last observed time {last})")]
    BeyondFollowUp { time: f64, last: f64 },

    #[error("expected exactly {expected} strata, got {got}")]
    StrataCount { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("scenario could not satisfy the regeneration rule after {0} attempts")]
    RegenerationLimit(u64),

    #[error("unknown simulation example {0} (expected 3, 4, 5 or 6)")]
    UnknownExample(u32),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("stratum {stratum} lacks a row for group {group}")]
    MissingCell { stratum: String, group: Group },

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invariant(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::InvariantViolation {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
