use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PointError {
    #[error("a configuration needs at least one point")]
    Empty,
    #[error("point {0} is not finite")]
    NonFinite(f64),
    #[error("points must be strictly increasing (x[{index}] = {value} after {previous})")]
    NotIncreasing { index: usize, previous: f64, value: f64 },
    #[error("coincident points at {0}")]
    Coincident(f64),
}

/// Strictly increasing tuple `x_1 < … < x_K` (a point of the Weyl chamber).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PointConfig(Vec<f64>);

impl PointConfig {
    pub fn new(points: Vec<f64>) -> Result<Self, PointError> {
        if points.is_empty() {
            return Err(PointError::Empty);
        }
        if let Some(&bad) = points.iter().find(|p| !p.is_finite()) {
            return Err(PointError::NonFinite(bad));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(PointError::NotIncreasing { index: i + 1, previous: w[0], value: w[1] });
            }
        }
        Ok(Self(points))
    }

    /// Sorts arbitrary distinct points, returning the configuration and the
    /// sign of the sorting permutation.
    pub fn sorted(points: &[f64]) -> Result<(Self, i32), PointError> {
        let (sorted, parity) = sort_with_parity(points);
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(PointError::Coincident(w[0]));
            }
        }
        Ok((Self::new(sorted)?, parity))
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| x * s).collect())
    }

    pub fn translated(&self, d: f64) -> Self {
        Self(self.0.iter().map(|x| x + d).collect())
    }

    pub fn vandermonde(&self) -> f64 {
        vandermonde(&self.0)
    }
}

impl TryFrom<Vec<f64>> for PointConfig {
    type Error = PointError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<PointConfig> for Vec<f64> {
    fn from(c: PointConfig) -> Self {
        c.0
    }
}

/// `Π_{i<j} (x_j − x_i)`.
pub fn vandermonde(x: &[f64]) -> f64 {
    let mut v = 1.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            v *= x[j] - x[i];
        }
    }
    v
}

/// Stable sort returning the sign of the permutation applied.
pub fn sort_with_parity(x: &[f64]) -> (Vec<f64>, i32) {
    let mut v = x.to_vec();
    let mut sign = 1;
    // insertion sort: each adjacent swap flips the sign
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    (v, sign)
}
