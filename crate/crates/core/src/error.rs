use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A gradient or iterate became NaN/Inf. Carries the offending iterate.
    #[error("numeric failure in {context}")]
    NumericFailure { context: &'static str, iterate: Vec<f64> },

    #[error("{context} did not converge within {iterations} iterations")]
    BudgetExceeded { context: &'static str, iterations: usize },

    #[error("penalty {lambda} is below the strong-convexity threshold {threshold}")]
    ConvexityViolation { lambda: f64, threshold: f64 },

    #[error("followers' game is not strongly monotone: {0}")]
    MonotonicityViolation(String),

    #[error("reduced leader objective has no minimizer: {0}")]
    NoEquilibrium(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape { what, expected, found })
    }
}
