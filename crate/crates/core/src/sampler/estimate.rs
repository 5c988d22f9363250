use serde::{Deserialize, Serialize};

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Running sum and sum of squares.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub sum: f64,
    pub sum_sq: f64,
    pub count: usize,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.sum += v;
        self.sum_sq += v * v;
        self.count += 1;
    }

    pub fn merge(&mut self, o: &Moments) {
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self.count += o.count;
    }

    pub fn estimate(&self, seed: u64) -> Estimate {
        Estimate::from_sums(self.sum, self.sum_sq, self.count, seed)
    }
}

impl Estimate {
    /// Mean and standard error from `Σv`, `Σv²` over `n` samples.
    pub fn from_sums(sum: f64, sum_sq: f64, n: usize, seed: u64) -> Self {
        assert!(n >= 1, "an estimate needs at least one sample");
        let nf = n as f64;
        let mean = sum / nf;
        let stderr = if n > 1 {
            let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n_samples: n, seed }
    }

    pub fn from_values(values: &[f64], seed: u64) -> Self {
        let mut m = Moments::default();
        values.iter().for_each(|&v| m.push(v));
        m.estimate(seed)
    }

    /// `|mean − target| / stderr`; infinite when the error is zero and the
    /// mean is off target.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.z_score(target) <= sigmas
    }

    /// `|a − b|` in units of the combined standard error.
    pub fn combined_z(&self, other: &Estimate) -> f64 {
        let d = (self.mean - other.mean).abs();
        if d == 0.0 {
            0.0
        } else {
            d / (self.stderr.powi(2) + other.stderr.powi(2)).sqrt()
        }
    }

    /// Ratio estimate with first-order error propagation for independent
    /// numerator and denominator.
    pub fn ratio(&self, other: &Estimate) -> (f64, f64) {
        let r = self.mean / other.mean;
        let rel = ((self.stderr / self.mean).powi(2) + (other.stderr / other.mean).powi(2)).sqrt();
        (r, (r * rel).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_statistics() {
        let e = Estimate::from_values(&[1.0, 2.0, 3.0, 4.0], 0);
        assert_eq!(e.mean, 2.5);
        // sample sd = sqrt(5/3)
        assert!((e.stderr - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        let c = Estimate::from_values(&[1.0; 10], 0);
        assert_eq!((c.mean, c.stderr), (1.0, 0.0));
        assert!(c.within(1.0, 3.0));
        assert!(!c.within(1.1, 3.0));
    }

    #[test]
    fn ratio_propagation() {
        let a = Estimate { mean: 2.0, stderr: 0.02, n_samples: 10, seed: 0 };
        let b = Estimate { mean: 4.0, stderr: 0.04, n_samples: 10, seed: 0 };
        let (r, s) = a.ratio(&b);
        assert_eq!(r, 0.5);
        assert!((s - 0.5 * (2.0f64 * 1e-4).sqrt()).abs() < 1e-15);
    }
}
