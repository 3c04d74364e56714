use thiserror::Error;

/// Errors raised by the estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid functional data: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("symmetric eigen-solver did not converge after {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("eigenvalue of component {component} is not positive ({value:e})")]
    NonPositiveEigenvalue { component: usize, value: f64 },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid candidate specification: {0}")]
    InvalidCandidate(String),

    #[error("penalized system is singular even after ridge jitter ({context})")]
    Singular { context: String },

    #[error("no smoothing parameter in the grid produced a usable fit")]
    SmoothingSelection,

    #[error("fold count Q={q} out of range for n={n} (need 2 <= Q <= n)")]
    InvalidFoldCount { q: usize, n: usize },

    #[error("fit failed for candidate {candidate} in fold {fold}: {source}")]
    FoldFit {
        candidate: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("residual variance of candidate {0} is zero")]
    ZeroResidualVariance(usize),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

pub type Result<T> = std::result::Result<T, Error>;
