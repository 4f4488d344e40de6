use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeoError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("configuration is empty")]
    EmptyConfiguration,
    #[error("density is degenerate: {0}")]
    DegenerateDensity(String),
    #[error("point {id} is missing the {mark} mark")]
    MissingMark { id: u64, mark: &'static str },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("a point already exists at the inserted position")]
    DuplicatePoint,
    #[error("inconsistent input: {0}")]
    InconsistentInput(String),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("value {value} lies outside the table range [{lo}, {hi}]")]
    Extrapolation { value: f64, lo: f64, hi: f64 },
    #[error("test functions are linearly dependent (smallest eigenvalue {min_eigenvalue:e}, trace {trace:e})")]
    LinearDependence { min_eigenvalue: f64, trace: f64 },
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
    #[error("look-back horizon exceeded the cap of {cap} time units")]
    HorizonExceeded { cap: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}
