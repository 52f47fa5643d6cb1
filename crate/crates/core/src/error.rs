use thiserror::Error;

/// Errors raised by the inference pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |A - A^H| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("levels live on different ambient spaces (d = {left} vs d = {right})")]
    AmbientMismatch { left: usize, right: usize },

    #[error("level is not a sublevel of the required enclosing level")]
    NotSublevel,

    #[error("models do not lie on the same Gibbs manifold")]
    ManifoldMismatch,

    #[error("correlation matrix is not positive definite")]
    NotPositiveDefinite,

    #[error(
        "target expectations are not achievable on this manifold \
         (after {iterations} iterations, |lambda|_inf = {lambda_norm:e}, residual = {residual:e})"
    )]
    Infeasible {
        iterations: usize,
        lambda: Vec<f64>,
        lambda_norm: f64,
        residual: f64,
    },

    #[error("Newton iteration stalled after {iterations} iterations (residual = {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error(
        "evidence procedure is inapplicable (chi2 = {chi2}, manifold dimension = {dim}) \
         and no fallback alpha was supplied"
    )]
    EvidenceInapplicable { chi2: f64, dim: usize },
}

impl Error {
    /// True for failures of the iterative solver rather than of the inputs.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::Infeasible { .. } | Error::NotConverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
