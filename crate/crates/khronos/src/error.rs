use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("ill-conditioned fit: condition estimate {cond:.3e} exceeds limit {limit:.1e}")]
    IllConditionedFit { cond: f64, limit: f64 },

    #[error("insufficient far-field points: {found} candidates remain, {required} required")]
    InsufficientFarfield { found: usize, required: usize },

    #[error("degenerate weights: all sample weights are zero")]
    DegenerateWeights,

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("non-finite gradient entry at index {index}")]
    NonFiniteGradient { index: usize },

    #[error("undefined variance: target vector is constant")]
    UndefinedVariance,

    #[error("zero target range: max(y) equals min(y)")]
    ZeroRange,

    #[error("interpolation requires at least 2 source stations, got {0}")]
    TooFewStations(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
