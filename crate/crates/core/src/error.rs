use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix data has {got} entries, expected {rows}x{cols}")]
    BadDimensions { rows: usize, cols: usize, got: usize },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not normal: commutator norm {deviation:e} exceeds {tol:e}")]
    NotNormal { deviation: f64, tol: f64 },

    #[error("matrix is not unitary: deviation {deviation:e} exceeds {tol:e}")]
    NotUnitary { deviation: f64, tol: f64 },

    #[error("{routine} did not converge within {iterations} iterations")]
    NoConvergence { routine: &'static str, iterations: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid bipartite shape {m}x{n}: both factors must be at least 2")]
    InvalidShape { m: usize, n: usize },

    #[error("state norm {norm} is not 1")]
    NotNormalized { norm: f64 },

    #[error("separability criteria disagree: residual {residual:e}, second Schmidt coefficient {sigma2:e}, tol {tol:e}")]
    OracleDisagreement { residual: f64, sigma2: f64, tol: f64 },

    #[error("genome decodes to a degenerate factor (norm {norm:e})")]
    InvalidGenome { norm: f64 },

    #[error("embedded U_H pattern is not unitary (deviation {deviation:e})")]
    TranscriptionError { deviation: f64 },

    #[error("no default bipartite shape for dimension {0}; pass one explicitly")]
    ShapeUnknown(usize),

    #[error("unknown gate '{0}'")]
    UnknownGate(String),

    #[error("invalid gate file: {0}")]
    GateFileInvalid(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
