use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {min_eigenvalue:.6e} below -{tolerance:.1e} * {max_eigenvalue:.6e}")]
    NotPsd {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
        tolerance: f64,
    },

    #[error("matrix is ill-conditioned (reciprocal condition estimate {rcond:.3e})")]
    IllConditioned { rcond: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("quadrature support is empty: [{lower}, {upper}]")]
    EmptySupport { lower: f64, upper: f64 },

    #[error("circulant generator is not Hermitian (defect {defect:.3e} at lag {lag})")]
    NonHermitianGenerator { lag: usize, defect: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed CSV: {0}")]
    MalformedCsv(String),

    #[error("trial {path} failed: {source}")]
    Trial {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by the numerics rather than by user input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Trial { source, .. } => source.is_numerical(),
            Error::NotPsd { .. }
            | Error::IllConditioned { .. }
            | Error::NotHermitian { .. }
            | Error::NonFinite { .. }
            | Error::NonHermitianGenerator { .. } => true,
            _ => false,
        }
    }
}
