//! Monte Carlo over the real Ginibre ensemble: sampling, spin variables and
//! estimators for spin moments, modified densities and characteristic
//! polynomial moments.

mod density;
mod estimate;
mod ginoe;
mod lemma;
mod moments;
mod stream;

pub use density::{estimate_rho_tilde, BinnedDensity};
pub use estimate::{Estimate, Moments};
pub use ginoe::{
    expected_real_count, real_count_growth, sample_ginoe, sample_ginoe_with, spin, GinOESample,
    RealCountGrowth, ENTRY_VARIANCE,
};
pub use lemma::{lemma1_check, lemma1_consistency, sphere_area, Lemma1Options, Lemma1Report, LEMMA1_MIN_HITS};
pub use moments::{estimate_charpoly_moment, estimate_spin_moment, estimate_spin_moments, MIN_SPIN_SAMPLES};
pub use stream::{stream_rng, StreamTag};
pub(crate) use stream::reduce_indexed;

use thiserror::Error;

use crate::kernel::KernelError;
use crate::linalg::LinalgError;
use crate::points::PointError;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Points(#[from] PointError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("matrix dimension must be at least 1")]
    ZeroDimension,
    #[error("x = {x} is numerically an eigenvalue (sign_det returned 0)")]
    Degenerate { x: f64 },
    #[error("eigenvalue parity and sign_det disagree at x = {x}")]
    SpinMismatch { x: f64 },
    #[error("need an even number of points, got {0}")]
    OddCount(usize),
    #[error("need between 1 and {max} coordinates, got {got}")]
    Dimension { got: usize, max: usize },
    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("bins must be sorted with at least two edges per coordinate")]
    BadBins,
    #[error("bin ranges of coordinates {0} and {1} overlap")]
    OverlappingBins(usize, usize),
    #[error("determinant product overflows f64 (log10 |value| = {log10:.1}); use log-domain output")]
    Overflow { log10: f64 },
    #[error("only {hits} samples hit the bins; roughly {required} samples needed")]
    InsufficientSamples { hits: usize, required: usize },
    #[error("{0}")]
    Invalid(String),
}
