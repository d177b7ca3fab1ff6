use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symbolic window cannot supply coordinate {index}")]
    WindowTooShort { index: i64 },
    #[error("system `{0}` is not invertible")]
    NotInvertible(String),
    #[error("point does not close up after {period} steps (gap {gap:e})")]
    NotPeriodic { period: usize, gap: f64 },
    #[error("system `{0}` is not a full shift")]
    NotAShift(String),
    #[error("system `{0}` has no expanding constant")]
    NoExpandingConstant(String),
    #[error("atomic measure too large for transport: {size} atoms (cap {cap})")]
    SizeCapExceeded { size: usize, cap: usize },
    #[error("cylinder refinement exceeded its budget (depth {depth}, unresolved mass {unresolved:e})")]
    DepthCapExceeded { depth: usize, unresolved: f64 },
    #[error("cover search exceeded its budget of {0} candidates")]
    CoverSearchBudgetExceeded(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unsupported query: {0}")]
    UnsupportedQuery(String),
    #[error("measure does not live on system `{0}`")]
    MeasureMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
