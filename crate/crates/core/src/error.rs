use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite{0}")]
    NotPd(String),

    #[error("graph is not decomposable")]
    NotDecomposable,

    #[error("invalid vertex pair ({0}, {1}) for p = {2}")]
    InvalidPair(usize, usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix has a nonzero entry at non-edge ({0}, {1})")]
    SupportViolation(usize, usize),

    #[error("MLE did not converge after {iterations} sweeps (max violation {max_violation:e})")]
    NoConvergence {
        iterations: usize,
        max_violation: f64,
    },

    #[error("chain has no retained samples")]
    EmptyChain,

    #[error("random model produced an empty graph in {0} draws")]
    DegenerateDraw(usize),

    #[error("a seed is required for deterministic Monte Carlo")]
    SeedRequired,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn not_pd(ctx: impl Into<String>) -> Self {
        let ctx = ctx.into();
        if ctx.is_empty() {
            Error::NotPd(String::new())
        } else {
            Error::NotPd(format!(" ({ctx})"))
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
