use std::fmt;

/// Errors produced anywhere in the crate.
///
/// Numerical failures and configuration/parse failures are kept apart so the
/// command-line front end can map them onto distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("symmetric eigen-solver did not converge")]
    ConvergenceFailure,
    #[error("matrix is singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularMatrix { min_eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sketch is rank deficient: projected matrix has numerical rank 0")]
    RankDeficientSketch,
    #[error("knot covariance block is singular (duplicate or near-duplicate knots)")]
    SingularKnotMatrix,
    #[error("negative variance deficit {deficit:e} at index {index}")]
    NegativeVarianceDeficit { index: usize, deficit: f64 },
    #[error("log-likelihood is not finite")]
    NonFiniteLikelihood,
    #[error("non-finite sampler state at iteration {iteration}: {detail}")]
    NonFiniteState { iteration: usize, detail: String },
    #[error("chain has {len} draws, need at least {min}")]
    ChainTooShort { len: usize, min: usize },
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema mismatch in column(s) {}: {message}", ColumnList(.columns))]
    SchemaMismatch { columns: Vec<usize>, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::ConvergenceFailure
                | Error::SingularMatrix { .. }
                | Error::RankDeficientSketch
                | Error::SingularKnotMatrix
                | Error::NegativeVarianceDeficit { .. }
                | Error::NonFiniteLikelihood
                | Error::NonFiniteState { .. }
                | Error::SingularCovariance
        )
    }
}

struct ColumnList<'a>(&'a [usize]);

impl fmt::Display for ColumnList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
