use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("representation mismatch: expected {expected}, found {found}")]
    RepMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,

    #[error("symbol is not finite at xi = {xi:?}")]
    NonFiniteSymbol { xi: Vec<f64> },

    #[error("unsupported order: {0}")]
    UnsupportedOrder(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("index relation violated: {0}")]
    IndexRelation(String),

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("time {t} lies outside the trajectory range [0, {end}]")]
    TimeOutOfRange { t: f64, end: f64 },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("nonzero mean: {0}")]
    NonzeroMean(String),

    #[error("non-contraction after {depth} subdivisions; measured factors {factors:?}")]
    NonContraction { depth: usize, factors: Vec<f64> },

    #[error("Picard iteration limit {limit} reached with residual {residual:e}")]
    IterationLimit { limit: usize, residual: f64 },

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("step-size control failed at r = {r}")]
    StepControl { r: f64 },

    #[error("ground-state construction failed: {0}")]
    Construction(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("admissible class: {0}")]
    AdmissibleClass(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
