use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("root finder did not converge after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("spectral radius is not a simple eigenvalue")]
    NotSimple,

    #[error("ill-conditioned rank decision: {0}")]
    IllConditioned(String),

    #[error("matrix is derogatory; minimal and characteristic polynomials differ")]
    NotNonderogatory,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("characteristic polynomial has nonzero constant term {0:e}; matrix is not singular")]
    NonsingularConstantTerm(f64),

    #[error("could not generate a valid problem after {attempts} attempts")]
    GenerationFailure { attempts: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown selector `{0}`")]
    UnknownSelector(String),

    #[error("numerical failure at t = {t}: {source}")]
    AtParameter {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error comes from numerics rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::ConvergenceFailure { .. }
            | Error::IllConditioned(_)
            | Error::NotNonderogatory
            | Error::NonsingularConstantTerm(_)
            | Error::GenerationFailure { .. } => true,
            Error::AtParameter { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
