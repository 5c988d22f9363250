use num_complex::Complex64;

use super::{ComplexSquareMatrix, LinalgError};

/// Householder QR of a square complex matrix: `m = Q R` with `Q` unitary and
/// `R` upper triangular. Columns whose sub-diagonal part is already zero are
/// left untouched, so triangular input yields `Q = I`.
pub fn complex_qr(m: &ComplexSquareMatrix) -> Result<(ComplexSquareMatrix, ComplexSquareMatrix), LinalgError> {
    let n = m.dim();
    let scale = m.max_abs();
    if scale == 0.0 {
        return Err(LinalgError::RankDeficient { column: 0 });
    }
    let mut r = m.clone();
    let mut q = ComplexSquareMatrix::identity(n);
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let tail2: f64 = (k + 1..n).map(|i| r[(i, k)].norm_sqr()).sum();
        if tail2 > 0.0 {
            let x0 = r[(k, k)];
            let norm = (x0.norm_sqr() + tail2).sqrt();
            let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
            let alpha = -phase * norm;
            v[k] = x0 - alpha;
            for i in k + 1..n {
                v[i] = r[(i, k)];
            }
            let vnorm2: f64 = (k..n).map(|i| v[i].norm_sqr()).sum();
            // R <- (I - 2 v v† / v†v) R
            for j in k..n {
                let dot: Complex64 = (k..n).map(|i| v[i].conj() * r[(i, j)]).sum();
                let f = dot * (2.0 / vnorm2);
                for i in k..n {
                    let vi = v[i];
                    r[(i, j)] -= f * vi;
                }
            }
            // Q <- Q (I - 2 v v† / v†v)
            for i in 0..n {
                let dot: Complex64 = (k..n).map(|j| q[(i, j)] * v[j]).sum();
                let f = dot * (2.0 / vnorm2);
                for j in k..n {
                    let vj = v[j].conj();
                    q[(i, j)] -= f * vj;
                }
            }
            for i in k + 1..n {
                r[(i, k)] = Complex64::new(0.0, 0.0);
            }
        }
        if r[(k, k)].norm() <= 1e-14 * scale * n as f64 {
            return Err(LinalgError::RankDeficient { column: k });
        }
    }
    Ok((q, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> ComplexSquareMatrix {
        let data = (0..n * n)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        ComplexSquareMatrix::from_row_major(n, data).unwrap()
    }

    fn unitarity_defect(q: &ComplexSquareMatrix) -> f64 {
        q.adjoint().matmul(q).max_abs_diff(&ComplexSquareMatrix::identity(q.dim()))
    }

    #[test]
    fn identity_is_fixed() {
        let (q, r) = complex_qr(&ComplexSquareMatrix::identity(4)).unwrap();
        assert_eq!(q, ComplexSquareMatrix::identity(4));
        assert_eq!(r, ComplexSquareMatrix::identity(4));
    }

    #[test]
    fn random_4x4_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let m = gaussian(4, &mut rng);
            let (q, r) = complex_qr(&m).unwrap();
            assert!(unitarity_defect(&q) < 1e-12);
            assert!(q.matmul(&r).max_abs_diff(&m) < 1e-10 * m.max_abs());
            for i in 0..4 {
                for j in 0..i {
                    assert_eq!(r[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn unitarity_up_to_32() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst = 0.0f64;
        for trial in 0..10_000 {
            let n = 1 + trial % 32;
            let (q, _) = complex_qr(&gaussian(n, &mut rng)).unwrap();
            worst = worst.max(unitarity_defect(&q));
        }
        assert!(worst < 1e-12, "worst unitarity defect {worst}");
    }

    #[test]
    fn rank_deficiency_is_an_error() {
        let mut m = ComplexSquareMatrix::zeros(3);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(1, 0)] = Complex64::new(1.0, 0.0);
        m[(0, 1)] = Complex64::new(2.0, 0.0);
        m[(1, 1)] = Complex64::new(2.0, 0.0);
        m[(2, 2)] = Complex64::new(1.0, 0.0);
        assert!(matches!(complex_qr(&m), Err(LinalgError::RankDeficient { .. })));
    }
}
