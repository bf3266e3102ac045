use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("lag {lag} requires more than {samples} samples")]
    InsufficientSamples { lag: usize, samples: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("ill-conditioned basis: condition number {0:e} exceeds 1e8")]
    IllConditionedBasis(f64),

    #[error("degenerate lag covariance: tr(R^H R) = {0:e}, nothing to subtract")]
    DegenerateLag(f64),

    #[error("matrix is not Hermitian: max |A - A^H| = {0:e}")]
    NotHermitian(f64),

    #[error("sky grids differ")]
    GridMismatch,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } => 3,
            _ => 4,
        }
    }
}
