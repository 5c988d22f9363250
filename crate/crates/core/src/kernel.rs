//! Closed-form bulk limits for real eigenvalues of the real Ginibre ensemble:
//! the tail function `F`, the 2×2 kernel block `H`, the Pfaffian correlation
//! functions, the modified density and the spin product moments.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::linalg::RealSquareMatrix;
use crate::pfaffian::{pfaffian, PfaffianError, SkewComplexMatrix};
use crate::points::{sort_with_parity, PointConfig, PointError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KernelError {
    #[error("number of points must be even, got {0}")]
    OddCount(usize),
    #[error(transparent)]
    Points(#[from] PointError),
    #[error(transparent)]
    Pfaffian(#[from] PfaffianError),
}

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// `F(x) = π^{-1/2} ∫_x^∞ e^{-z²} dz = erfc(x) / 2`.
pub fn tail(x: f64) -> f64 {
    0.5 * libm::erfc(x)
}

/// `F'(x) = -π^{-1/2} e^{-x²}`.
pub fn tail_d1(x: f64) -> f64 {
    -FRAC_1_SQRT_PI * (-x * x).exp()
}

/// `F''(x) = 2x π^{-1/2} e^{-x²}`.
pub fn tail_d2(x: f64) -> f64 {
    2.0 * x * FRAC_1_SQRT_PI * (-x * x).exp()
}

/// `∫_u^∞ e^{-z²} dz`.
pub fn gaussian_tail_integral(u: f64) -> f64 {
    0.5 * PI.sqrt() * libm::erfc(u)
}

/// Sign with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Value of the 2×2 kernel block at separation `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBlock(pub [[f64; 2]; 2]);

impl KernelBlock {
    pub fn transpose(&self) -> Self {
        let m = self.0;
        Self([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn neg(&self) -> Self {
        let m = self.0;
        Self([[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]])
    }
}

/// `H(z) = [[-F''(z), -F'(z)], [F'(z), sgn(z) F(|z|)]]`.
pub fn h_block(z: f64) -> KernelBlock {
    KernelBlock([[-tail_d2(z), -tail_d1(z)], [tail_d1(z), sgn(z) * tail(z.abs())]])
}

/// The 2K×2K matrix whose (i, j) block is `H(x_j - x_i)`.
pub fn kernel_matrix(points: &[f64]) -> RealSquareMatrix {
    let k = points.len();
    let mut a = RealSquareMatrix::zeros(2 * k);
    for i in 0..k {
        for j in 0..k {
            let h = h_block(points[j] - points[i]).0;
            for r in 0..2 {
                for c in 0..2 {
                    a[(2 * i + r, 2 * j + c)] = h[r][c];
                }
            }
        }
    }
    a
}

/// Bulk K-point correlation function of the real eigenvalues.
///
/// Symmetric in its arguments; unordered input is sorted first.
pub fn rho(points: &[f64]) -> Result<f64, KernelError> {
    let (cfg, _) = PointConfig::sorted(points)?;
    let a = kernel_matrix(cfg.points());
    let m = crate::linalg::ComplexSquareMatrix::from_real(&a);
    Ok(pfaffian(&SkewComplexMatrix::new(m)?).re)
}

/// `C_K = (4/π)^{K/4}`.
pub fn c_k(k: usize) -> Result<f64, KernelError> {
    if !k.is_multiple_of(2) {
        return Err(KernelError::OddCount(k));
    }
    Ok((4.0 / PI).powf(k as f64 / 4.0))
}

fn require_even(k: usize) -> Result<(), KernelError> {
    if k == 0 {
        return Err(PointError::Empty.into());
    }
    if !k.is_multiple_of(2) {
        return Err(KernelError::OddCount(k));
    }
    Ok(())
}

/// `C_K Pf[(x_i − x_j) e^{−(x_i − x_j)²}]_{i<j}`, extended off the Weyl
/// chamber antisymmetrically (sorted internally, permutation sign applied).
pub fn rho_tilde(points: &[f64]) -> Result<f64, KernelError> {
    require_even(points.len())?;
    let (cfg, parity) = PointConfig::sorted(points)?;
    let x = cfg.points();
    let a = SkewComplexMatrix::from_upper_real(x.len(), |i, j| {
        let d = x[i] - x[j];
        d * (-d * d).exp()
    })?;
    Ok(f64::from(parity) * c_k(x.len())? * pfaffian(&a).re)
}

/// Ratio between the limiting modified density, normalized as
/// `(−1/2)^K ∂_1…∂_K E[Π s]`, and [`rho_tilde`]: `2^{−K/2}`.
pub fn modified_density_scale(k: usize) -> f64 {
    2f64.powf(-(k as f64) / 2.0)
}

/// Limiting modified density in the normalization estimated by the Monte
/// Carlo counting measure: `2^{−K/2}` times [`rho_tilde`].
pub fn modified_density(points: &[f64]) -> Result<f64, KernelError> {
    Ok(modified_density_scale(points.len()) * rho_tilde(points)?)
}

/// `C_K Pf[∫_{x_j − x_i}^∞ e^{−z²} dz]_{i<j}` evaluated in the given index
/// order with no ordering checks. On the closed Weyl chamber this is the spin
/// product moment; elsewhere it is the analytic continuation of that formula.
///
/// Since `C_K (√π/2)^{K/2} = 1` the prefactor cancels and the matrix entries
/// are plain `erfc(x_j − x_i)`, which keeps `s_x s_x = 1` exact.
pub fn spin_pfaffian(points: &[f64]) -> Result<f64, KernelError> {
    require_even(points.len())?;
    let a = SkewComplexMatrix::from_upper(points.len(), |i, j| {
        Complex64::new(libm::erfc(points[j] - points[i]), 0.0)
    })?;
    Ok(pfaffian(&a).re)
}

/// Limiting spin product moment `E[Π_k s_{x_k}]` for an even number of
/// points. Coinciding points are allowed (`s_x s_x = 1`); the moment is
/// symmetric, so input order does not matter.
pub fn spin_moment(points: &[f64]) -> Result<f64, KernelError> {
    require_even(points.len())?;
    if let Some(&bad) = points.iter().find(|p| !p.is_finite()) {
        return Err(PointError::NonFinite(bad).into());
    }
    let (x, _) = sort_with_parity(points);
    spin_pfaffian(&x)
}
