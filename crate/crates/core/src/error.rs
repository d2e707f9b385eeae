use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        op: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("data length {got} does not match {rows}x{cols}")]
    InvalidData {
        rows: usize,
        cols: usize,
        got: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("triangular factor has a (near) zero diagonal entry {value:e} at {index}")]
    SingularDiagonal { index: usize, value: f64 },
    #[error("matrix is not upper triangular: entry ({row}, {col}) = {value:e}")]
    NotUpperTriangular { row: usize, col: usize, value: f64 },
    #[error("rank deficient input: |R[{index},{index}]| = {value:e}")]
    RankDeficient { index: usize, value: f64 },
    #[error(
        "power iteration did not converge after {iterations} iterations (best estimate {estimate})"
    )]
    NoConvergence { estimate: f64, iterations: usize },
    #[error("dense solve failed: pivot {pivot:e} at step {index}")]
    SolveFailure { index: usize, pivot: f64 },
    #[error("Householder vector {index} has norm {norm:e}, below 1e-12")]
    ZeroVector { index: usize, norm: f64 },
    #[error("Householder stack needs 1 <= l <= n, got l = {l}, n = {n}")]
    InvalidStack { n: usize, l: usize },
    #[error("matrix is not orthogonal: ||Q^T Q - I||_F = {residual:e}")]
    NotOrthogonal { residual: f64 },
    #[error("determinant {det} does not equal the required {expected}")]
    WrongDeterminant { det: f64, expected: f64 },
    #[error("reduction of column {column} drifted from e1 by {deviation:e}")]
    DecompositionDrift { column: usize, deviation: f64 },
    #[error("matrix is not on the Stiefel manifold: ||W^T W - I||_F = {residual:e}")]
    NotOnManifold { residual: f64 },
    #[error("truncated parametrization requires m < n, got n = {n}, m = {m}")]
    RequiresStrictTruncation { n: usize, m: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("numerical check failed: {0}")]
    CheckFailed(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl Error {
    /// True for errors caused by bad input or configuration, as opposed to
    /// numerical failures inside an algorithm.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidData { .. }
                | Error::NonFinite { .. }
                | Error::NotUpperTriangular { .. }
                | Error::InvalidStack { .. }
                | Error::NotOrthogonal { .. }
                | Error::WrongDeterminant { .. }
                | Error::NotOnManifold { .. }
                | Error::RequiresStrictTruncation { .. }
                | Error::ShapeMismatch(_)
                | Error::UnknownMethod(_)
                | Error::InvalidConfig(_)
                | Error::Parse { .. }
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
