use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::density::estimate_rho_tilde;
use super::estimate::Estimate;
use super::moments::charpoly_integrand_moment;
use super::SamplerError;
use crate::points::{vandermonde, PointConfig};

/// Fewest samples with an eigenvalue tuple in the bin product before the
/// density side is considered resolved.
pub const LEMMA1_MIN_HITS: usize = 400;

/// Surface area of the unit sphere in `ℝ^{m+1}`.
pub fn sphere_area(m: usize) -> f64 {
    let h = (m as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / libm::tgamma(h)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Lemma1Options {
    /// Side of the square bin centred on each point.
    pub bin_width: f64,
    pub density_samples: usize,
    pub charpoly_samples: usize,
    pub seed: u64,
}

impl Default for Lemma1Options {
    fn default() -> Self {
        Self { bin_width: 0.2, density_samples: 400_000, charpoly_samples: 200_000, seed: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub n: usize,
    pub points: Vec<f64>,
    /// Bin-averaged modified density.
    pub lhs: Estimate,
    /// Bin-averaged right-hand side with `E_{n−2K}`.
    pub rhs: Estimate,
    pub ratio: f64,
    pub ratio_stderr: f64,
    /// Same with `E_{n−K}` in place of `E_{n−2K}`.
    pub rhs_alt: Estimate,
    pub ratio_alt: f64,
    pub ratio_alt_stderr: f64,
    pub hits: usize,
}

/// `Π_{k=1}^{2K} |S_{n−k}| π^{−(n−k)/2} / 16^K`.
fn rhs_constant(n: usize, two_k: usize) -> f64 {
    let k = two_k / 2;
    (1..=two_k)
        .map(|j| sphere_area(n - j) * PI.powf(-((n - j) as f64) / 2.0))
        .product::<f64>()
        / 16f64.powi(k as i32)
}

/// Bin-averaged `V(x) Π e^{−x_k²} E_m[Π_l det(M − x_l)]` times `constant`.
fn rhs_estimate(m: usize, centres: &[f64], width: f64, samples: usize, seed: u64, constant: f64) -> Result<Estimate, SamplerError> {
    let e = charpoly_integrand_moment(m, samples, seed, |_, rng| {
        let x: Vec<f64> = centres.iter().map(|c| c + width * (rng.gen::<f64>() - 0.5)).collect();
        let w = vandermonde(&x) * x.iter().map(|v| (-v * v).exp()).product::<f64>();
        Ok((x, w))
    })?;
    Ok(Estimate { mean: constant * e.mean, stderr: constant.abs() * e.stderr, ..e })
}

/// Compares the Monte Carlo modified density of GinOE(`n`) at an ordered
/// configuration of `2K` points with the characteristic-polynomial
/// expression, both averaged over square bins around the points.
///
/// The ratio is expected to be independent of the configuration; its value
/// is reported, not asserted.
pub fn lemma1_check(n: usize, cfg: &PointConfig, opts: &Lemma1Options) -> Result<Lemma1Report, SamplerError> {
    let x = cfg.points();
    let two_k = x.len();
    if !two_k.is_multiple_of(2) {
        return Err(SamplerError::OddCount(two_k));
    }
    if two_k >= n {
        return Err(SamplerError::Invalid(format!("need 2K < n, got 2K = {two_k}, n = {n}")));
    }
    let w = opts.bin_width;
    if w.is_nan() || w <= 0.0 || x.windows(2).any(|p| p[1] - p[0] <= w) {
        return Err(SamplerError::Invalid(format!("bin width {w} must be positive and below the point spacing")));
    }
    let bins: Vec<Vec<f64>> = x.iter().map(|&c| vec![c - w / 2.0, c + w / 2.0]).collect();
    let dens = estimate_rho_tilde(n, &bins, opts.density_samples, opts.seed)?;
    if dens.hits < LEMMA1_MIN_HITS {
        let per = dens.hits.max(1) as f64 / opts.density_samples as f64;
        return Err(SamplerError::InsufficientSamples {
            hits: dens.hits,
            required: (LEMMA1_MIN_HITS as f64 / per).ceil() as usize,
        });
    }
    let lhs = dens.cell(&vec![0; two_k]);
    let rhs_seed = opts.seed ^ 0x5bd1_e995;
    let rhs = rhs_estimate(n - two_k, x, w, opts.charpoly_samples, rhs_seed, rhs_constant(n, two_k))?;
    let rhs_alt = rhs_estimate(n - two_k / 2, x, w, opts.charpoly_samples, rhs_seed, rhs_constant(n, two_k))?;
    let (ratio, ratio_stderr) = lhs.ratio(&rhs);
    let (ratio_alt, ratio_alt_stderr) = lhs.ratio(&rhs_alt);
    Ok(Lemma1Report {
        n,
        points: x.to_vec(),
        lhs,
        rhs,
        ratio,
        ratio_stderr,
        rhs_alt,
        ratio_alt,
        ratio_alt_stderr,
        hits: dens.hits,
    })
}

/// Inverse-variance weighted mean of the ratios and the largest pairwise
/// discrepancy in combined standard errors.
pub fn lemma1_consistency(reports: &[Lemma1Report]) -> (f64, f64) {
    let wsum: f64 = reports.iter().map(|r| r.ratio_stderr.powi(-2)).sum();
    let mean = reports.iter().map(|r| r.ratio * r.ratio_stderr.powi(-2)).sum::<f64>() / wsum;
    let mut worst: f64 = 0.0;
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            let z = (a.ratio - b.ratio).abs() / (a.ratio_stderr.powi(2) + b.ratio_stderr.powi(2)).sqrt();
            worst = worst.max(z);
        }
    }
    (mean, worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(0) - 2.0).abs() < 1e-14);
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn rhs_is_antisymmetric_through_vandermonde() {
        let a = rhs_estimate(4, &[-0.5, 0.5], 0.0, 2000, 3, 1.0).unwrap();
        let b = rhs_estimate(4, &[0.5, -0.5], 0.0, 2000, 3, 1.0).unwrap();
        assert!((a.mean + b.mean).abs() < 1e-12 * a.mean.abs());
        assert!(a.mean > 0.0);
    }

    #[test]
    fn reports_insufficient_samples() {
        let cfg = PointConfig::new(vec![-0.4, 0.4]).unwrap();
        let opts = Lemma1Options { bin_width: 0.05, density_samples: 500, charpoly_samples: 100, seed: 2 };
        match lemma1_check(10, &cfg, &opts) {
            Err(SamplerError::InsufficientSamples { hits, required }) => {
                assert!(hits < LEMMA1_MIN_HITS);
                assert!(required > 500);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_configurations() {
        let opts = Lemma1Options::default();
        let cfg = PointConfig::new(vec![0.0, 0.1]).unwrap();
        assert!(matches!(lemma1_check(10, &cfg, &opts), Err(SamplerError::Invalid(_))));
        let cfg = PointConfig::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(lemma1_check(2, &cfg, &opts), Err(SamplerError::Invalid(_))));
    }
}
