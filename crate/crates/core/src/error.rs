use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e}, allowed {allowed:.3e})")]
    NotSymmetric { asymmetry: f64, allowed: f64 },

    #[error("symmetric eigensolver did not converge after {sweeps} sweeps (off-diagonal {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("matrix is not SPD (pivot {pivot:.3e} at row {row})")]
    NotSpd { row: usize, pivot: f64 },

    #[error("matrix is indefinite (eigenvalue {eigenvalue:.3e})")]
    Indefinite { eigenvalue: f64 },

    #[error("matrix is not positive semidefinite (lambda_min/lambda_max = {ratio:.3e})")]
    NotPsd { ratio: f64 },

    #[error("KKT system is singular (pivot {pivot:.3e} at column {col})")]
    SingularKkt { col: usize, pivot: f64 },

    #[error("constraint operator B is not surjective (rank {rank} < {rows})")]
    BNotSurjective { rank: usize, rows: usize },

    #[error("saddle point system is ill-posed: N(A) and N(B) intersect nontrivially")]
    IllPosed,

    #[error("operation requires a system of kind {expected}")]
    WrongKind { expected: &'static str },

    #[error("compatibility condition violated: |N^t(f - B^t p)| = {violation:.3e}")]
    CompatibilityViolated { violation: f64 },

    #[error("iteration did not converge within {iterations} iterations")]
    MaxIterExceeded { iterations: usize },

    #[error("Richardson step {step:.3e} is not below 2/lambda_max = {limit:.3e}")]
    DivergentStep { step: f64, limit: f64 },

    #[error("Bbar is not a right inverse of B (|B Bbar^t - I| = {defect:.3e})")]
    NotRightInverse { defect: f64 },

    #[error("jump operator is rank deficient (rank {rank} < {rows})")]
    RankDeficient { rank: usize, rows: usize },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("Matrix Market parse error in {path:?} at line {line}: {msg}")]
    MatrixMarket { path: PathBuf, line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by malformed input files or configuration,
    /// as opposed to mathematical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::MatrixMarket { .. } | Error::Config(_) | Error::Io(_))
    }
}
