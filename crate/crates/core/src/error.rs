use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector norm {norm} deviates from 1 beyond tolerance {tol}")]
    Normalization { norm: f64, tol: f64 },

    #[error("matrix is not a rotation: orthogonality residual {orthogonality:e}, det {det}")]
    NotRotation { orthogonality: f64, det: f64 },

    #[error("matrix is not Hermitian: asymmetry {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },

    #[error("correlation matrix has rank 3: third singular value {sigma3:e}")]
    RankViolation { sigma3: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("negative spectrum parameter: s = {s}, t = {t}")]
    NegativeParameter { s: f64, t: f64 },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("expectation value has imaginary part {imag:e}")]
    NonRealExpectation { imag: f64 },

    #[error("seesaw objective decreased from {before} to {after} at iteration {iteration}")]
    NonMonotone { before: f64, after: f64, iteration: usize },

    #[error("operator norm {norm} outside certification band for scenario {scenario}")]
    CertificationBand { norm: f64, scenario: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
