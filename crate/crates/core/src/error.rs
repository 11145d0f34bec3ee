use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid with {nodes} nodes exceeds the budget of {budget}")]
    GridTooLarge { nodes: usize, budget: usize },
    #[error("cylinder does not meet the grid domain")]
    EmptyIntersection,
    #[error("fractional power of a negative value {0}")]
    NegativeBase(f64),
    #[error("weight has zero mass on the ball")]
    ZeroWeight,
    #[error("explicit step dt = {dt} exceeds the stability bound {bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("linear solve did not converge: residual {residual} after {iterations} iterations")]
    LinearSolveDiverged { residual: f64, iterations: usize },
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("ambient cylinder leaves the grid domain: {0}")]
    AmbientOutsideDomain(String),
    #[error("invalid geometry constants: {0}")]
    InvalidConstants(String),
    #[error("no stored cylinder at height {0}")]
    ProfileMissing(f64),
    #[error("cylinder is not sub-intrinsic: ratio {ratio} exceeds {bound}")]
    NotSubIntrinsic { ratio: f64, bound: f64 },
    #[error("cylinder is not intrinsic: ratio {ratio} outside [1/{k}, {k}]")]
    NotIntrinsic { ratio: f64, k: f64 },
    #[error("right-hand side too large: {lhs} > {rhs}")]
    FSmallnessFails { lhs: f64, rhs: f64 },
    #[error("regime label does not match the classifier")]
    RegimeMismatch,
    #[error("hypothesis not met: {0}")]
    HypothesisUnmet(String),
    #[error("bad range: {0}")]
    BadRange(String),
    #[error("dilated cylinder at height {height} exceeds the maximal height {max}")]
    DilationEscapesDomain { height: f64, max: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
