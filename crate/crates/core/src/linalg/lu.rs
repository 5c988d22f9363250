use num_complex::Complex64;

use super::{ComplexSquareMatrix, RealSquareMatrix};

/// Relative pivot threshold below which a matrix is treated as singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-13;

/// Sign and log-magnitude of a determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    /// −1, 0 or +1. Zero marks a (near-)singular input.
    pub sign: i8,
    pub log_abs: f64,
}

impl LogDet {
    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_abs.exp()
        }
    }
}

/// Partial-pivoting elimination tracking pivot signs and swap parity.
pub fn log_det(m: &RealSquareMatrix) -> LogDet {
    let n = m.dim();
    let tol = SINGULAR_PIVOT_TOL * m.max_abs();
    let mut a = m.clone();
    let mut sign = 1i8;
    let mut log_abs = 0.0;
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, a[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= tol || pmax == 0.0 {
            return LogDet { sign: 0, log_abs: f64::NEG_INFINITY };
        }
        if p != k {
            a.swap_rows(p, k);
            sign = -sign;
        }
        let piv = a[(k, k)];
        if piv < 0.0 {
            sign = -sign;
        }
        log_abs += piv.abs().ln();
        for i in k + 1..n {
            let f = a[(i, k)] / piv;
            if f == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let v = a[(k, j)];
                a[(i, j)] -= f * v;
            }
        }
    }
    LogDet { sign, log_abs }
}

/// Exact sign of `det(m)`: −1, +1, or 0 when a pivot falls below
/// [`SINGULAR_PIVOT_TOL`] times the largest entry.
pub fn sign_det(m: &RealSquareMatrix) -> i8 {
    log_det(m).sign
}

/// Determinant of a complex matrix by partial-pivoting LU.
pub fn complex_det(m: &ComplexSquareMatrix) -> Complex64 {
    let n = m.dim();
    let mut a = m.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[(i, k)].norm() > a[(p, k)].norm() {
                p = i;
            }
        }
        if a[(p, k)].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            for j in 0..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(p, j)];
                a[(p, j)] = t;
            }
            det = -det;
        }
        let piv = a[(k, k)];
        det *= piv;
        for i in k + 1..n {
            let f = a[(i, k)] / piv;
            for j in k + 1..n {
                let v = a[(k, j)];
                a[(i, j)] -= f * v;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_schur;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random(n: usize, seed: u64) -> RealSquareMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * n).map(|_| StandardNormal.sample(&mut rng)).collect();
        RealSquareMatrix::from_row_major(n, data).unwrap()
    }

    #[test]
    fn trivial_signs() {
        assert_eq!(sign_det(&RealSquareMatrix::identity(5)), 1);
        assert_eq!(sign_det(&RealSquareMatrix::from_diagonal(&[1.0, -1.0])), -1);
        assert_eq!(sign_det(&RealSquareMatrix::from_diagonal(&[1.0, 0.0, 2.0])), 0);
        let rank_one = RealSquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(sign_det(&rank_one), 0);
    }

    #[test]
    fn agrees_with_schur_block_product() {
        for seed in 0..200 {
            let m = random(10, seed);
            let s = real_schur(&m).unwrap();
            let d = s.determinant();
            assert_eq!(sign_det(&m), if d > 0.0 { 1 } else { -1 }, "seed {seed}");
        }
    }

    #[test]
    fn log_det_value_matches_complex_det() {
        let m = random(7, 3);
        let a = log_det(&m).value();
        let b = complex_det(&ComplexSquareMatrix::from_real(&m));
        assert!((a - b.re).abs() < 1e-10 * a.abs());
        assert!(b.im.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn permutation_parity(seed in 0u64..10_000, a in 0usize..6, b in 0usize..6) {
            let m = random(6, seed);
            let s = sign_det(&m);
            prop_assert!(s != 0);
            prop_assert_eq!(s * s, 1);
            let mut pm = m.clone();
            pm.swap_rows(a, b);
            let parity = if a == b { 1 } else { -1 };
            prop_assert_eq!(sign_det(&pm), parity * s);
        }
    }
}
