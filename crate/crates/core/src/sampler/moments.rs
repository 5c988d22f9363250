use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::estimate::{Estimate, Moments};
use super::ginoe::{sample_ginoe_with, spin};
use super::stream::{reduce_indexed, stream_rng, StreamTag};
use super::SamplerError;
use crate::linalg::{log_det, RealSquareMatrix};
use crate::points::PointError;

pub const MIN_SPIN_SAMPLES: usize = 100;

/// Largest log-magnitude accepted before a determinant product is reported
/// as an overflow.
const MAX_LOG_ABS: f64 = 700.0;

fn check_spin_points(points: &[f64]) -> Result<(), SamplerError> {
    if points.is_empty() {
        return Err(PointError::Empty.into());
    }
    if !points.len().is_multiple_of(2) {
        return Err(SamplerError::OddCount(points.len()));
    }
    if let Some(&bad) = points.iter().find(|p| !p.is_finite()) {
        return Err(PointError::NonFinite(bad).into());
    }
    Ok(())
}

/// Monte Carlo `E_N[Π_k s_{x_k}]`. Repeated points are allowed.
pub fn estimate_spin_moment(n: usize, points: &[f64], samples: usize, seed: u64) -> Result<Estimate, SamplerError> {
    let mut v = estimate_spin_moments(n, &[points.to_vec()], samples, seed)?;
    Ok(v.remove(0))
}

/// Several spin moments evaluated on the same matrix samples.
pub fn estimate_spin_moments(
    n: usize,
    configs: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<Vec<Estimate>, SamplerError> {
    if samples < MIN_SPIN_SAMPLES {
        return Err(SamplerError::TooFewSamples { got: samples, min: MIN_SPIN_SAMPLES });
    }
    if n == 0 {
        return Err(SamplerError::ZeroDimension);
    }
    configs.iter().try_for_each(|c| check_spin_points(c))?;
    let acc = reduce_indexed(
        samples,
        || vec![Moments::default(); configs.len()],
        |acc, i| {
            let tag = StreamTag { seed, index: i as u64 };
            let mut rng = stream_rng(seed, tag.index);
            let s = sample_ginoe_with(n, &mut rng, tag)?;
            for (m, cfg) in acc.iter_mut().zip(configs) {
                let mut prod = 1i8;
                for &x in cfg {
                    prod *= spin(&s, x)?;
                }
                m.push(f64::from(prod));
            }
            Ok::<_, SamplerError>(())
        },
        |a, b| a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y)),
    )?;
    Ok(acc.iter().map(|m| m.estimate(seed)).collect())
}

/// `Π_l det(M − x_l I)` as a sign (0 if any factor is singular) and log-magnitude.
pub(crate) fn log_det_product(m: &RealSquareMatrix, points: &[f64]) -> (i8, f64) {
    let mut sign = 1i8;
    let mut log_abs = 0.0;
    for &x in points {
        let d = log_det(&m.shifted(x));
        sign *= d.sign;
        log_abs += d.log_abs;
    }
    (sign, log_abs)
}

/// Monte Carlo `E_n[Π_l det(M − x_l I)]`.
pub fn estimate_charpoly_moment(n: usize, points: &[f64], samples: usize, seed: u64) -> Result<Estimate, SamplerError> {
    if let Some(&bad) = points.iter().find(|p| !p.is_finite()) {
        return Err(PointError::NonFinite(bad).into());
    }
    charpoly_integrand_moment(n, samples, seed, |_, _| Ok((points.to_vec(), 1.0)))
}

/// Mean of `w · Π_l det(M − x_l I)` where each sample draws its own points
/// and weight `(x, w)` from the sample's stream after the matrix entries.
pub(crate) fn charpoly_integrand_moment<F>(n: usize, samples: usize, seed: u64, draw: F) -> Result<Estimate, SamplerError>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<(Vec<f64>, f64), SamplerError> + Sync,
{
    if samples < 2 {
        return Err(SamplerError::TooFewSamples { got: samples, min: 2 });
    }
    if n == 0 {
        return Err(SamplerError::ZeroDimension);
    }
    let sd = super::ENTRY_VARIANCE.sqrt();
    let m = reduce_indexed(
        samples,
        Moments::default,
        |acc, i| {
            let mut rng = stream_rng(seed, i as u64);
            let data = (0..n * n)
                .map(|_| sd * rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let m = RealSquareMatrix::from_row_major(n, data)?;
            let (points, weight) = draw(i, &mut rng)?;
            let (sign, log_abs) = log_det_product(&m, &points);
            let log_total = log_abs + weight.abs().ln();
            if sign != 0 && log_total > MAX_LOG_ABS {
                return Err(SamplerError::Overflow { log10: log_total / std::f64::consts::LN_10 });
            }
            let v = if sign == 0 { 0.0 } else { f64::from(sign) * weight.signum() * log_total.exp() };
            acc.push(v);
            Ok(())
        },
        |a, b| a.merge(&b),
    )?;
    Ok(m.estimate(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::spin_moment;

    #[test]
    fn coincident_points_give_exact_one() {
        let e = estimate_spin_moment(20, &[0.3, 0.3], 200, 1).unwrap();
        assert_eq!((e.mean, e.stderr, e.n_samples), (1.0, 0.0, 200));
    }

    #[test]
    fn far_apart_points_decorrelate() {
        let e = estimate_spin_moment(40, &[0.0, 4.0], 1000, 2).unwrap();
        assert!(e.within(libm::erfc(4.0), 3.0), "{e:?}");
    }

    #[test]
    fn shared_samples_match_single_runs() {
        let cfgs = vec![vec![0.0, 0.5], vec![-0.2, 0.8]];
        let both = estimate_spin_moments(12, &cfgs, 300, 4).unwrap();
        for (c, e) in cfgs.iter().zip(&both) {
            assert_eq!(*e, estimate_spin_moment(12, c, 300, 4).unwrap());
        }
    }

    #[test]
    fn seeds_agree_within_errors() {
        let a = estimate_spin_moment(30, &[0.0, 0.5], 2000, 10).unwrap();
        let b = estimate_spin_moment(30, &[0.0, 0.5], 2000, 11).unwrap();
        assert_ne!(a.mean, b.mean);
        assert!(a.combined_z(&b) < 3.0);
    }

    #[test]
    fn spin_moment_near_kernel_at_moderate_n() {
        let e = estimate_spin_moment(60, &[0.0, 0.5], 3000, 12).unwrap();
        assert!(e.within(spin_moment(&[0.0, 0.5]).unwrap(), 3.0), "{e:?}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(estimate_spin_moment(5, &[0.0], 200, 0), Err(SamplerError::OddCount(1))));
        assert!(matches!(
            estimate_spin_moment(5, &[0.0, 1.0], 50, 0),
            Err(SamplerError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn one_by_one_charpoly_mean() {
        // E[m − x] = −x.
        for x in [-1.0, 0.4, 2.0] {
            let e = estimate_charpoly_moment(1, &[x], 20_000, 3).unwrap();
            assert!(e.within(-x, 3.0), "{e:?}");
        }
    }

    #[test]
    fn two_by_two_charpoly_product() {
        // E_2[det(M − x)det(M − y)] = 2(1/4 + xy/2 + (xy)²/2) for entry variance 1/2.
        let (x, y) = (0.3, -0.7);
        let p = x * y;
        let exact = 0.5 + p + p * p;
        let e = estimate_charpoly_moment(2, &[x, y], 40_000, 8).unwrap();
        assert!(e.within(exact, 3.0), "{e:?} vs {exact}");
    }

    #[test]
    fn overflow_is_reported() {
        let r = estimate_charpoly_moment(4, &[1e90; 3], 10, 0);
        assert!(matches!(r, Err(SamplerError::Overflow { .. })));
    }
}
