use std::path::PathBuf;

/// Every failure the toolkit can report.
///
/// Numerical breakdowns carry the simulation time at which they were detected
/// so that a run report can point at the offending sample.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry encountered")]
    NonFinite,

    #[error("input is not Hermitian: |M - M^dagger| = {residual:e} exceeds {tolerance:e}")]
    NonHermitianInput { residual: f64, tolerance: f64 },

    #[error("eigensolver failed to converge")]
    ConvergenceFailure,

    #[error("operator is not positive definite: smallest eigenvalue {min_eigenvalue:e} <= {threshold:e}")]
    NotPositiveDefinite { min_eigenvalue: f64, threshold: f64 },

    #[error("eigenvector matrix is ill conditioned (condition number {condition:e}); matrix is defective or nearly so")]
    DefectiveMatrix { condition: f64 },

    #[error("degenerate spectrum: eigenvalues closer than {gap:e}")]
    DegenerateSpectrum { gap: f64 },

    #[error("matrix is singular or ill conditioned (condition number {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("bra family does not span the space: smallest metric eigenvalue {min_eigenvalue:e}")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("operator is not unitary: |V^dagger V - I| = {residual:e}")]
    NotUnitary { residual: f64 },

    #[error("metric lost positivity at t = {t}: smallest eigenvalue {min_eigenvalue:e}")]
    MetricDegenerated { t: f64, min_eigenvalue: f64 },

    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("biorthonormal basis degraded at t = {t}: gram deviation {gram:e}, completeness deviation {completeness:e}")]
    BasisDegenerated {
        t: f64,
        gram: f64,
        completeness: f64,
    },

    #[error("generator returned an invalid operator at t = {t}: {reason}")]
    InvalidGenerator { t: f64, reason: String },

    #[error("need at least {required} samples, found {found}")]
    InsufficientSamples { required: usize, found: usize },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Simulation time attached to the failure, if any.
    pub fn time(&self) -> Option<f64> {
        match self {
            Error::MetricDegenerated { t, .. }
            | Error::NonFiniteState { t }
            | Error::BasisDegenerated { t, .. }
            | Error::InvalidGenerator { t, .. } => Some(*t),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
