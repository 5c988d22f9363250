use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::estimate::{Estimate, Moments};
use super::stream::{reduce_indexed, stream_rng, StreamTag};
use super::SamplerError;
use crate::linalg::{real_schur, sign_det, RealSquareMatrix, Spectrum};

/// Entry variance forced by the density `∝ e^{−Tr M Mᵀ}`.
pub const ENTRY_VARIANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct GinOESample {
    pub matrix: RealSquareMatrix,
    pub spectrum: Spectrum,
    pub seed_tag: StreamTag,
}

/// Draws the sample for stream `tag`.
pub fn sample_ginoe(n: usize, tag: StreamTag) -> Result<GinOESample, SamplerError> {
    let mut rng = stream_rng(tag.seed, tag.index);
    sample_ginoe_with(n, &mut rng, tag)
}

/// Draws a sample from a caller-supplied generator; `tag` is only recorded.
pub fn sample_ginoe_with(n: usize, rng: &mut impl Rng, tag: StreamTag) -> Result<GinOESample, SamplerError> {
    if n == 0 {
        return Err(SamplerError::ZeroDimension);
    }
    let sd = ENTRY_VARIANCE.sqrt();
    let data = (0..n * n)
        .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();
    let matrix = RealSquareMatrix::from_row_major(n, data)?;
    let spectrum = real_schur(&matrix)?;
    Ok(GinOESample { matrix, spectrum, seed_tag: tag })
}

/// `s_x = (−1)^{#real eigenvalues < x}`, cross-checked against
/// `sgn det(M − x I)`.
pub fn spin(sample: &GinOESample, x: f64) -> Result<i8, SamplerError> {
    let parity: i8 = if sample.spectrum.count_below(x).is_multiple_of(2) { 1 } else { -1 };
    match sign_det(&sample.matrix.shifted(x)) {
        0 => Err(SamplerError::Degenerate { x }),
        // det(M − x) = Π(λ − x): conjugate pairs contribute |λ − x|² > 0.
        s => {
            if s == parity {
                Ok(parity)
            } else {
                Err(SamplerError::SpinMismatch { x })
            }
        }
    }
}

/// Exact mean number of real eigenvalues of an `n × n` Gaussian real matrix:
/// `1/2 + √2 ₂F₁(1, −1/2; n; 1/2) / B(n, 1/2)` (Edelman, Kostlan, Shub).
pub fn expected_real_count(n: usize) -> f64 {
    assert!(n >= 1);
    let nf = n as f64;
    // ₂F₁(1, −1/2; n; 1/2) = Σ_k (−1/2)_k / (n)_k 2^{−k}
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..200 {
        let kf = k as f64;
        term *= (-0.5 + kf) / (nf + kf) * 0.5;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    let log_beta = libm::lgamma(nf) + libm::lgamma(0.5) - libm::lgamma(nf + 0.5);
    0.5 + std::f64::consts::SQRT_2 * sum / log_beta.exp()
}

/// Real-eigenvalue counts at `n` and `4n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealCountGrowth {
    pub n: usize,
    pub small: Estimate,
    pub large: Estimate,
    pub ratio: f64,
    pub ratio_stderr: f64,
    pub exact_small: f64,
    pub exact_large: f64,
}

impl RealCountGrowth {
    pub fn exact_ratio(&self) -> f64 {
        self.exact_large / self.exact_small
    }
}

pub(crate) fn real_count(n: usize, samples: usize, seed: u64) -> Result<Estimate, SamplerError> {
    if samples < 2 {
        return Err(SamplerError::TooFewSamples { got: samples, min: 2 });
    }
    let m = reduce_indexed(
        samples,
        Moments::default,
        |acc, i| {
            let s = sample_ginoe(n, StreamTag { seed, index: i as u64 })?;
            acc.push(s.spectrum.real_eigenvalues.len() as f64);
            Ok::<_, SamplerError>(())
        },
        |a, b| a.merge(&b),
    )?;
    Ok(m.estimate(seed))
}

/// Mean real-eigenvalue counts at `n` and `4n` from independent streams.
pub fn real_count_growth(n: usize, samples: usize, seed: u64) -> Result<RealCountGrowth, SamplerError> {
    if n == 0 {
        return Err(SamplerError::ZeroDimension);
    }
    let small = real_count(n, samples, seed)?;
    let large = real_count(4 * n, samples, seed.wrapping_add(0x9e37_79b9))?;
    let (ratio, ratio_stderr) = large.ratio(&small);
    Ok(RealCountGrowth {
        n,
        small,
        large,
        ratio,
        ratio_stderr,
        exact_small: expected_real_count(n),
        exact_large: expected_real_count(4 * n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> GinOESample {
        let matrix = RealSquareMatrix::from_diagonal(d);
        let spectrum = real_schur(&matrix).unwrap();
        GinOESample { matrix, spectrum, seed_tag: StreamTag { seed: 0, index: 0 } }
    }

    #[test]
    fn spins_of_constructed_matrices() {
        let s = diag(&[1.0, -1.0]);
        assert_eq!(spin(&s, 0.0).unwrap(), -1);
        assert_eq!(spin(&s, 2.0).unwrap(), 1);
        assert_eq!(spin(&s, -2.0).unwrap(), 1);
        let odd = diag(&[0.5, -1.0, 2.0]);
        assert_eq!(spin(&odd, 0.0).unwrap(), -1);
        assert_eq!(spin(&odd, 1.0).unwrap(), 1);
        assert_eq!(spin(&odd, 3.0).unwrap(), -1);
        let rot = RealSquareMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let spectrum = real_schur(&rot).unwrap();
        let r = GinOESample { matrix: rot, spectrum, seed_tag: StreamTag { seed: 0, index: 0 } };
        for x in [-3.0, 0.0, 0.7, 10.0] {
            assert_eq!(spin(&r, x).unwrap(), 1);
        }
        assert_eq!(spin(&s, 1.0), Err(SamplerError::Degenerate { x: 1.0 }));
    }

    #[test]
    fn parity_and_det_agree_on_random_pairs() {
        let mut rng = stream_rng(11, 0);
        for i in 0..10_000u64 {
            let n = 1 + (i % 12) as usize;
            let s = sample_ginoe(n, StreamTag { seed: 11, index: i }).unwrap();
            let x: f64 = rng.gen_range(-4.0..4.0);
            spin(&s, x).unwrap();
        }
    }

    #[test]
    fn spin_flips_exactly_at_real_eigenvalues() {
        for i in 0..50 {
            let s = sample_ginoe(30, StreamTag { seed: 5, index: i }).unwrap();
            let mut prev = spin(&s, -20.0).unwrap();
            assert_eq!(prev, 1);
            let mut flips = 0;
            for k in 1..=4000 {
                let x = -20.0 + 40.0 * k as f64 / 4000.0;
                let cur = spin(&s, x).unwrap();
                flips += usize::from(cur != prev);
                prev = cur;
            }
            assert_eq!(flips, s.spectrum.real_eigenvalues.len());
        }
    }

    #[test]
    fn samples_are_reproducible_and_consistent() {
        let tag = StreamTag { seed: 3, index: 9 };
        let a = sample_ginoe(8, tag).unwrap();
        let b = sample_ginoe(8, tag).unwrap();
        assert_eq!(a, b);
        let tr = a.matrix.trace();
        let scale = a.matrix.max_abs() * 8.0;
        assert!((a.spectrum.sum() - tr).abs() < 1e-8 * scale);
        assert_eq!(a.spectrum.len(), 8);
        assert_eq!(sample_ginoe(0, tag), Err(SamplerError::ZeroDimension));
    }

    #[test]
    fn entry_moments() {
        // Tr M Mᵀ has mean N²/2 and variance N²/2 at N = 8.
        let mut m = Moments::default();
        for i in 0..20_000u64 {
            let s = sample_ginoe(8, StreamTag { seed: 21, index: i }).unwrap();
            m.push(s.matrix.as_slice().iter().map(|v| v * v).sum());
        }
        assert!(m.estimate(21).within(32.0, 3.0));
    }

    #[test]
    fn exact_real_counts() {
        assert!((expected_real_count(1) - 1.0).abs() < 1e-14);
        assert!((expected_real_count(2) - 2f64.sqrt()).abs() < 1e-14);
        assert!((expected_real_count(3) - (1.0 + 0.5f64.sqrt())).abs() < 1e-14);
        // Large-n asymptotics √(2n/π) + 1/2.
        let n = 10_000.0;
        let asym = (2.0 * n / std::f64::consts::PI).sqrt() + 0.5;
        assert!((expected_real_count(10_000) - asym).abs() < 1e-2);
    }

    #[test]
    fn mc_real_count_matches_exact() {
        for n in [2usize, 4, 9] {
            let e = real_count(n, 4000, 2).unwrap();
            assert!(e.within(expected_real_count(n), 3.0), "n = {n}: {e:?}");
        }
    }
}
