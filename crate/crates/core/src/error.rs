use thiserror::Error;

/// Residual diagnostics attached to a solver that ran out of iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub iterations: usize,
    pub primal: f64,
    pub dual: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {value} lies outside the open domain ({lo}, {hi})")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("centers {first} and {second} coincide (value {value})")]
    DuplicateCenter { first: usize, second: usize, value: f64 },

    #[error("centers must be strictly increasing (index {index})")]
    Order { index: usize },

    #[error("matrix is numerically singular: {0}")]
    Singular(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("constraint system is rank deficient (rank {rank} < {rows})")]
    Rank { rank: usize, rows: usize },

    #[error(
        "{solver} did not converge after {} iterations (primal {:.3e}, dual {:.3e})",
        .residuals.iterations, .residuals.primal, .residuals.dual
    )]
    Nonconvergence { solver: &'static str, residuals: Residuals },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Csv { path: String, row: usize, column: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that are properties of the data (singular Grams,
    /// unconverged solves) rather than caller misuse.
    pub fn is_mathematical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_) | Error::Rank { .. } | Error::Nonconvergence { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
