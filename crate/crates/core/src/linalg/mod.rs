//! Dense real and complex linear algebra: real Schur eigenvalues, determinant
//! signs and complex QR.

mod lu;
mod matrix;
mod qr;
mod schur;

pub use lu::{complex_det, log_det, sign_det, LogDet, SINGULAR_PIVOT_TOL};
pub use matrix::{ComplexSquareMatrix, RealSquareMatrix};
pub use qr::complex_qr;
pub use schur::{real_schur, real_schur_with, SchurOptions, Spectrum};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix must have dimension at least 1")]
    Empty,
    #[error("expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },
}
