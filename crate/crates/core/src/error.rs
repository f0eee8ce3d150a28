use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("ill-conditioned cell {cell}: {msg}")]
    IllConditionedCell { cell: usize, msg: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("ellipticity violated: {0}")]
    Ellipticity(String),

    #[error("condensation failed for edge {edge}: {msg}")]
    Condensation { edge: usize, msg: String },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not SPD: {0}")]
    NotSpd(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("query point outside the domain: {0}")]
    Domain(String),

    #[error("configuration error for key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
