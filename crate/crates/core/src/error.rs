use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("invalid block shape: {0}")]
    InvalidShape(String),

    #[error("invalid trace weights: {0}")]
    InvalidTrace(String),

    #[error("invalid tower: {}", .0.join("; "))]
    InvalidTower(Vec<String>),

    #[error("level {level} out of range (top level is {top})")]
    LevelOutOfRange { level: usize, top: usize },

    #[error("invalid beta sequence: {0}")]
    InvalidBeta(String),

    #[error("element is not in the ideal: block {block} has norm {norm:e}")]
    NotInIdeal { block: usize, norm: f64 },

    #[error("ideals live on different towers")]
    TowerMismatch,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("hausdorff distance {measured:e} does not satisfy < eps^2 = {required:e}")]
    HausdorffPrecondition { measured: f64, required: f64 },

    #[error("feasibility search did not converge; distance lies in [{lo}, {hi}]")]
    NonConvergence { lo: f64, hi: f64 },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
