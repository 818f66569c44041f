//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("operation undefined for the zero matrix")]
    ZeroMatrix,

    #[error(
        "matrix is defective or near-defective: eigenvector condition number {cond:.3e} \
         exceeds cap {cap:.3e}; nearest eigenvalue cluster {cluster:?}"
    )]
    NonDiagonalizable {
        cond: f64,
        cap: f64,
        /// The pair of eigenvalues whose near-degeneracy drives the blow-up.
        cluster: Vec<num_complex::Complex64>,
    },

    #[error("spectrum is not closed under complex conjugation; unpaired eigenvalues {unpaired:?}")]
    NotPseudoHermitian {
        unpaired: Vec<num_complex::Complex64>,
    },

    #[error("operator is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("not quasi-Hermitian: {0}")]
    NotQuasiHermitian(String),

    #[error("broken phase: gamma = {gamma} >= g = {g}; no positive definite metric exists")]
    BrokenPhase { g: f64, gamma: f64 },

    #[error("spectrum has no imaginary-part gap (gamma_d - gamma_1 = {gap:.3e})")]
    NoSpectralGap { gap: f64 },

    #[error("well-formedness violated: {0}")]
    WellFormedness(String),

    #[error("matrix exponential overflow: scaled norm {norm:.3e} too large")]
    ExpOverflow { norm: f64 },

    #[error("integration unstable ({0}); reduce the timestep")]
    Instability(String),

    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),

    #[error("precision floor reached: {0}")]
    PrecisionFloor(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear algebra backend failure: {0}")]
    Backend(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}
