//! Pfaffians of complex skew-symmetric matrices and perfect matchings.
//!
//! [`pfaffian`] uses Parlett–Reid skew tridiagonalization with partial
//! pivoting. [`pfaffian_matchings`] is the defining signed sum over perfect
//! matchings and serves as an exponential-cost oracle for small dimensions.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::ComplexSquareMatrix;

/// Largest dimension accepted by [`pfaffian_matchings`].
pub const MAX_MATCHINGS_DIM: usize = 12;
/// Largest size accepted by [`enumerate_matchings`].
pub const MAX_ENUMERATION: usize = 16;
/// Relative antisymmetry defect tolerated at construction.
pub const SKEW_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PfaffianError {
    #[error("dimension {0} is odd")]
    OddDimension(usize),
    #[error("matrix is not skew-symmetric: max |A_ij + A_ji| = {defect:e} (scale {scale:e})")]
    NotSkew { defect: f64, scale: f64 },
    #[error("dimension {dim} exceeds the matchings-sum cap {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
}

/// Even-dimensional complex antisymmetric matrix with an exactly zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewComplexMatrix(ComplexSquareMatrix);

impl SkewComplexMatrix {
    /// Antisymmetrizes `m` after checking that it is already skew to within
    /// [`SKEW_TOL`] relative to its largest entry.
    pub fn new(m: ComplexSquareMatrix) -> Result<Self, PfaffianError> {
        let n = m.dim();
        if !n.is_multiple_of(2) {
            return Err(PfaffianError::OddDimension(n));
        }
        let scale = m.max_abs();
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in i..n {
                defect = defect.max((m[(i, j)] + m[(j, i)]).norm());
            }
        }
        if defect > SKEW_TOL * scale {
            return Err(PfaffianError::NotSkew { defect, scale });
        }
        let mut a = m;
        for i in 0..n {
            a[(i, i)] = Complex64::new(0.0, 0.0);
            for j in i + 1..n {
                let v = (a[(i, j)] - a[(j, i)]) * 0.5;
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        Ok(Self(a))
    }

    /// Builds the matrix from its strict upper triangle `entry(i, j)`, `i < j`.
    pub fn from_upper(dim: usize, mut entry: impl FnMut(usize, usize) -> Complex64) -> Result<Self, PfaffianError> {
        if !dim.is_multiple_of(2) {
            return Err(PfaffianError::OddDimension(dim));
        }
        let mut a = ComplexSquareMatrix::zeros(dim);
        for i in 0..dim {
            for j in i + 1..dim {
                let v = entry(i, j);
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        Ok(Self(a))
    }

    /// Real variant of [`Self::from_upper`].
    pub fn from_upper_real(dim: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Result<Self, PfaffianError> {
        Self::from_upper(dim, |i, j| Complex64::new(entry(i, j), 0.0))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &ComplexSquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexSquareMatrix {
        self.0
    }
}

/// Block-diagonal `J` with 2×2 blocks `[[0, 1], [-1, 0]]`.
pub struct CanonicalSymplectic;

impl CanonicalSymplectic {
    pub fn matrix(dim: usize) -> Result<ComplexSquareMatrix, PfaffianError> {
        if !dim.is_multiple_of(2) {
            return Err(PfaffianError::OddDimension(dim));
        }
        let mut j = ComplexSquareMatrix::zeros(dim);
        for b in (0..dim).step_by(2) {
            j[(b, b + 1)] = Complex64::new(1.0, 0.0);
            j[(b + 1, b)] = Complex64::new(-1.0, 0.0);
        }
        Ok(j)
    }

    pub fn skew(dim: usize) -> Result<SkewComplexMatrix, PfaffianError> {
        Ok(SkewComplexMatrix(Self::matrix(dim)?))
    }
}

pub fn pfaffian(a: &SkewComplexMatrix) -> Complex64 {
    let n = a.dim();
    let mut m = a.0.clone();
    let mut pf = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    for k in (0..n.saturating_sub(1)).step_by(2) {
        // Pivot: largest entry in column k below the diagonal.
        let mut kp = k + 1;
        for i in k + 2..n {
            if m[(i, k)].norm() > m[(kp, k)].norm() {
                kp = i;
            }
        }
        if kp != k + 1 {
            for j in k..n {
                let t = m[(k + 1, j)];
                m[(k + 1, j)] = m[(kp, j)];
                m[(kp, j)] = t;
            }
            for i in k..n {
                let t = m[(i, k + 1)];
                m[(i, k + 1)] = m[(i, kp)];
                m[(i, kp)] = t;
            }
            pf = -pf;
        }
        let piv = m[(k, k + 1)];
        if piv == zero {
            return zero;
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<Complex64> = (k + 2..n).map(|j| m[(k, j)] / piv).collect();
            let col: Vec<Complex64> = (k + 2..n).map(|i| m[(i, k + 1)]).collect();
            for (a, i) in (k + 2..n).enumerate() {
                for (b, j) in (k + 2..n).enumerate() {
                    m[(i, j)] += tau[a] * col[b] - col[a] * tau[b];
                }
            }
        }
    }
    pf
}

/// Perfect matching of `{1, …, 2K}` in canonical form: `i_k < j_k` and
/// `i_1 < i_2 < … < i_K`. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    /// Canonicalizes and validates an arbitrary list of pairs.
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, PfaffianError> {
        let mut pairs: Vec<(usize, usize)> = pairs.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        pairs.sort_unstable();
        let n = 2 * pairs.len();
        let mut seen = vec![false; n + 1];
        for &(i, j) in &pairs {
            for v in [i, j] {
                if v == 0 || v > n || seen[v] {
                    return Err(PfaffianError::InvalidMatching(format!("{pairs:?} does not partition 1..={n}")));
                }
                seen[v] = true;
            }
        }
        Ok(Self { pairs })
    }

    /// `(1,2)(3,4)…(2K-1,2K)`.
    pub fn adjacent(k: usize) -> Self {
        Self { pairs: (0..k).map(|p| (2 * p + 1, 2 * p + 2)).collect() }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Number of pairs `K`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The word `i_1 j_1 i_2 j_2 … i_K j_K`.
    pub fn word(&self) -> Vec<usize> {
        self.pairs.iter().flat_map(|&(i, j)| [i, j]).collect()
    }

    /// Partner of `v` (1-based).
    pub fn partner(&self, v: usize) -> Option<usize> {
        self.pairs.iter().find_map(|&(i, j)| {
            if i == v {
                Some(j)
            } else if j == v {
                Some(i)
            } else {
                None
            }
        })
    }

    /// Sign of the permutation `1…2K ↦ word`.
    pub fn sign(&self) -> i32 {
        if inversions(self).is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, j) in &self.pairs {
            write!(f, "({i},{j})")?;
        }
        Ok(())
    }
}

/// Inversions of the word of `m` read as a permutation of `1…2K`.
pub fn inversions(m: &Matching) -> usize {
    let w = m.word();
    let mut count = 0;
    for a in 0..w.len() {
        for b in a + 1..w.len() {
            if w[a] > w[b] {
                count += 1;
            }
        }
    }
    count
}

/// All `(2K-1)!!` canonical matchings of `{1, …, two_k}` in lexicographic order.
pub fn enumerate_matchings(two_k: usize) -> Result<Vec<Matching>, PfaffianError> {
    if !two_k.is_multiple_of(2) {
        return Err(PfaffianError::OddDimension(two_k));
    }
    if two_k > MAX_ENUMERATION {
        return Err(PfaffianError::TooLarge { dim: two_k, cap: MAX_ENUMERATION });
    }
    let mut out = Vec::new();
    let mut used = vec![false; two_k + 1];
    let mut cur = Vec::with_capacity(two_k / 2);
    fn rec(n: usize, used: &mut [bool], cur: &mut Vec<(usize, usize)>, out: &mut Vec<Matching>) {
        let Some(i) = (1..=n).find(|&v| !used[v]) else {
            out.push(Matching { pairs: cur.clone() });
            return;
        };
        used[i] = true;
        for j in i + 1..=n {
            if used[j] {
                continue;
            }
            used[j] = true;
            cur.push((i, j));
            rec(n, used, cur, out);
            cur.pop();
            used[j] = false;
        }
        used[i] = false;
    }
    rec(two_k, &mut used, &mut cur, &mut out);
    Ok(out)
}

/// Σ over matchings σ of `sign(π(σ)) Π_k A[i_k, j_k]`.
pub fn pfaffian_matchings(a: &SkewComplexMatrix) -> Result<Complex64, PfaffianError> {
    let n = a.dim();
    if n > MAX_MATCHINGS_DIM {
        return Err(PfaffianError::TooLarge { dim: n, cap: MAX_MATCHINGS_DIM });
    }
    let m = a.matrix();
    let total = enumerate_matchings(n)?
        .iter()
        .map(|s| {
            let prod: Complex64 = s.pairs().iter().map(|&(i, j)| m[(i - 1, j - 1)]).product();
            prod * f64::from(s.sign())
        })
        .sum();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_det;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_skew(dim: usize, seed: u64) -> SkewComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SkewComplexMatrix::from_upper(dim, |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        })
        .unwrap()
    }

    fn random_complex(dim: usize, seed: u64) -> ComplexSquareMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..dim * dim)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        ComplexSquareMatrix::from_row_major(dim, data).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn two_by_two_is_upper_entry() {
        let a = SkewComplexMatrix::from_upper_real(2, |_, _| 3.0).unwrap();
        assert_eq!(pfaffian(&a), c(3.0));
        assert_eq!(pfaffian_matchings(&a).unwrap(), c(3.0));
    }

    #[test]
    fn canonical_symplectic_has_unit_pfaffian() {
        for dim in [2, 4, 6, 8] {
            let j = CanonicalSymplectic::skew(dim).unwrap();
            assert_eq!(pfaffian(&j), c(1.0));
            if dim <= MAX_MATCHINGS_DIM {
                assert_eq!(pfaffian_matchings(&j).unwrap(), c(1.0));
            }
            let jm = j.matrix();
            let sq = jm.matmul(jm);
            assert_eq!(sq, ComplexSquareMatrix::identity(dim).scale(c(-1.0)));
            assert_eq!(jm.transpose(), jm.scale(c(-1.0)));
        }
    }

    #[test]
    fn four_by_four_expansion() {
        let a = random_skew(4, 2);
        let m = a.matrix();
        let expect = m[(0, 1)] * m[(2, 3)] - m[(0, 2)] * m[(1, 3)] + m[(0, 3)] * m[(1, 2)];
        assert!(rel(pfaffian_matchings(&a).unwrap(), expect) < 1e-15);
        assert!(rel(pfaffian(&a), expect) < 1e-13);
    }

    #[test]
    fn random_8x8_squares_to_det() {
        let a = random_skew(8, 8);
        let pf = pfaffian(&a);
        assert!(rel(pf * pf, complex_det(a.matrix())) < 1e-10);
    }

    #[test]
    fn matchings_agree_on_6x6() {
        let a = random_skew(6, 6);
        assert!(rel(pfaffian(&a), pfaffian_matchings(&a).unwrap()) < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(
            SkewComplexMatrix::new(ComplexSquareMatrix::identity(3)).unwrap_err(),
            PfaffianError::OddDimension(3)
        );
        assert!(matches!(
            SkewComplexMatrix::new(ComplexSquareMatrix::identity(2)),
            Err(PfaffianError::NotSkew { .. })
        ));
        assert_eq!(enumerate_matchings(5).unwrap_err(), PfaffianError::OddDimension(5));
        let big = random_skew(14, 1);
        assert!(matches!(pfaffian_matchings(&big), Err(PfaffianError::TooLarge { .. })));
    }

    #[test]
    fn construction_zeroes_diagonal_and_symmetrizes() {
        let mut m = ComplexSquareMatrix::zeros(2);
        m[(0, 1)] = c(1.0);
        m[(1, 0)] = c(-1.0 + 1e-14);
        m[(0, 0)] = c(1e-15);
        let a = SkewComplexMatrix::new(m).unwrap();
        assert_eq!(a.matrix()[(0, 0)], c(0.0));
        assert_eq!(a.matrix()[(0, 1)], -a.matrix()[(1, 0)]);
    }

    #[test]
    fn matching_counts() {
        let m2 = enumerate_matchings(2).unwrap();
        assert_eq!(m2, vec![Matching::new([(1, 2)]).unwrap()]);
        let m4 = enumerate_matchings(4).unwrap();
        let expect: Vec<Matching> = [[(1, 2), (3, 4)], [(1, 3), (2, 4)], [(1, 4), (2, 3)]]
            .into_iter()
            .map(|p| Matching::new(p).unwrap())
            .collect();
        assert_eq!(m4, expect);
        assert_eq!(enumerate_matchings(8).unwrap().len(), 105);
        assert_eq!(enumerate_matchings(0).unwrap().len(), 1);
        for two_k in (2..=12).step_by(2) {
            let all = enumerate_matchings(two_k).unwrap();
            let double_fact: usize = (1..two_k).step_by(2).product();
            assert_eq!(all.len(), double_fact);
            let uniq: std::collections::HashSet<_> = all.iter().collect();
            assert_eq!(uniq.len(), all.len());
        }
    }

    #[test]
    fn inversion_counts() {
        assert_eq!(inversions(&Matching::new([(1, 2), (3, 4)]).unwrap()), 0);
        assert_eq!(inversions(&Matching::new([(1, 3), (2, 4)]).unwrap()), 1);
        assert_eq!(inversions(&Matching::new([(1, 4), (2, 3)]).unwrap()), 2);
    }

    #[test]
    fn invalid_matching_rejected() {
        assert!(Matching::new([(1, 2), (2, 3)]).is_err());
        assert!(Matching::new([(1, 5), (2, 3)]).is_err());
        assert_eq!(Matching::new([(4, 3), (2, 1)]).unwrap(), Matching::adjacent(2));
    }

    /// The coefficient of the monomial Π a_{i_k j_k} in the Pfaffian is
    /// (−1)^inv. Extract it by setting the matching's entries to 1 and every
    /// other entry to 0.
    #[test]
    fn inversion_parity_is_expansion_sign() {
        for two_k in [2, 4, 6, 8] {
            for s in enumerate_matchings(two_k).unwrap() {
                let a = SkewComplexMatrix::from_upper_real(two_k, |i, j| {
                    if s.partner(i + 1) == Some(j + 1) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .unwrap();
                let expect = if inversions(&s).is_multiple_of(2) { 1.0 } else { -1.0 };
                assert_eq!(pfaffian(&a), c(expect), "{s}");
            }
        }
    }

    proptest! {
        #[test]
        fn squares_to_determinant(half in 1usize..=6, seed in any::<u64>()) {
            let a = random_skew(2 * half, seed);
            let pf = pfaffian(&a);
            prop_assert!(rel(pf * pf, complex_det(a.matrix())) < 1e-10);
        }

        #[test]
        fn congruence(half in 1usize..=4, seed in any::<u64>()) {
            let dim = 2 * half;
            let a = random_skew(dim, seed);
            let b = random_complex(dim, seed ^ 0x5555);
            let bab = b.matmul(a.matrix()).matmul(&b.transpose());
            let bab = SkewComplexMatrix::new(bab).unwrap();
            let lhs = pfaffian(&bab);
            let rhs = complex_det(&b) * pfaffian(&a);
            prop_assert!(rel(lhs, rhs) < 1e-9);
        }

        #[test]
        fn tridiagonalization_matches_matchings(half in 1usize..=5, seed in any::<u64>()) {
            let a = random_skew(2 * half, seed);
            prop_assert!(rel(pfaffian(&a), pfaffian_matchings(&a).unwrap()) < 1e-11);
        }
    }
}
