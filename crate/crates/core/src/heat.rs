//! Heat-equation side of the modified density: the kernel `g_t`, the
//! Pfaffian solution `ρ̃_t`, finite-difference residuals, Gaussian solutions
//! attached to orthogonal projectors, and distributional initial data.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrals::{exact_shape, i_t_quadrature_k2, to_skew_unitary, HaarUnitary, IntegralError};
use crate::kernel::{c_k, KernelError};
use crate::linalg::{ComplexSquareMatrix, RealSquareMatrix};
use crate::pfaffian::{pfaffian, PfaffianError, SkewComplexMatrix};
use crate::points::{vandermonde, PointError};
use crate::quadrature::Composite;

#[derive(Debug, Error, PartialEq)]
pub enum HeatError {
    #[error("t must be positive and finite, got {0}")]
    BadTime(f64),
    #[error("need an even number of points, got {0}")]
    OddCount(usize),
    #[error("finite-difference step {h} must be positive and below t = {t}")]
    BadStep { h: f64, t: f64 },
    #[error("matrix is not an orthogonal projector (defect {0:e})")]
    NotProjector(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("test function does not decay: |φ| = {value:e} at the edge of [-{radius}, {radius}]²")]
    NonDecaying { value: f64, radius: f64 },
    #[error(transparent)]
    Points(#[from] PointError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Pfaffian(#[from] PfaffianError),
    #[error(transparent)]
    Integral(#[from] IntegralError),
}

fn check_time(t: f64) -> Result<(), HeatError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(HeatError::BadTime(t))
    }
}

/// `g_t(x) = (πt/2)^{−1/2} e^{−2x²/t}`: the centred Gaussian of variance
/// `t/4`, fundamental solution of `∂_t = ∂²_x / 8`.
pub fn g(t: f64, x: f64) -> Result<f64, HeatError> {
    check_time(t)?;
    Ok((PI * t / 2.0).sqrt().recip() * (-2.0 * x * x / t).exp())
}

fn g_prime(t: f64, x: f64) -> f64 {
    -4.0 * x / t * (PI * t / 2.0).sqrt().recip() * (-2.0 * x * x / t).exp()
}

/// `(C_K / K!) Pf[∂_{y_i} g_{2t}(y_i − y_j)]` in the given index order.
pub fn rho_tilde_t(y: &[f64], t: f64) -> Result<f64, HeatError> {
    check_time(t)?;
    let k = y.len();
    if k == 0 {
        return Err(PointError::Empty.into());
    }
    if !k.is_multiple_of(2) {
        return Err(HeatError::OddCount(k));
    }
    if let Some(&bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(PointError::NonFinite(bad).into());
    }
    let a = SkewComplexMatrix::from_upper_real(k, |i, j| g_prime(2.0 * t, y[i] - y[j]))?;
    let fact: f64 = (1..=k).map(|v| v as f64).product();
    Ok(c_k(k)? / fact * pfaffian(&a).re)
}

/// `rho_tilde_t` frozen at a time, as a function of the points.
#[derive(Debug, Clone, Copy)]
pub struct HeatSolution {
    pub t: f64,
}

impl HeatSolution {
    pub fn eval(&self, y: &[f64]) -> Result<f64, HeatError> {
        rho_tilde_t(y, self.t)
    }
}

/// Ratio `rho_tilde_t(x, 1) / kernel::rho_tilde(x)` for `K` points:
/// `(−2/√π)^{K/2} / K!`.
pub fn unit_time_ratio(k: usize) -> f64 {
    let fact: f64 = (1..=k).map(|v| v as f64).product();
    (-2.0 / PI.sqrt()).powi((k / 2) as i32) / fact
}

/// `t^{−K(K+1)/4} V(x) · exact_shape(x, t)`, which differs from
/// `rho_tilde_t` only by a `K`-dependent constant.
pub fn integral_form(x: &[f64], t: f64) -> Result<f64, HeatError> {
    let k = x.len() as f64;
    Ok(t.powf(-k * (k + 1.0) / 4.0) * vandermonde(x) * exact_shape(x, t)?)
}

/// The same with `I_t` from the `aU(2)` quadrature, `K = 2` only.
pub fn integral_form_k2(x1: f64, x2: f64, t: f64) -> Result<f64, HeatError> {
    Ok(t.powf(-1.5) * (x2 - x1) * i_t_quadrature_k2(x1, x2, t)?)
}

/// Constant `rho_tilde_t / integral_form`: `(C_K/K!) (2/√π)^{K/2}`.
pub fn integral_form_constant(k: usize) -> Result<f64, HeatError> {
    let fact: f64 = (1..=k).map(|v| v as f64).product();
    Ok(c_k(k)? / fact * (2.0 / PI.sqrt()).powi((k / 2) as i32))
}

/// Central-difference residual of `(∂_t − (1/8) Σ_k ∂²_{x_k}) f` at `(x, t)`
/// with step `h` in every variable.
pub fn heat_residual_of<F>(f: F, x: &[f64], t: f64, h: f64) -> Result<f64, HeatError>
where
    F: Fn(&[f64], f64) -> Result<f64, HeatError>,
{
    heat_residual_with(f, x, t, h, 1.0 / 8.0)
}

/// Residual of `(∂_t − c Δ) f`.
pub fn heat_residual_with<F>(f: F, x: &[f64], t: f64, h: f64, c: f64) -> Result<f64, HeatError>
where
    F: Fn(&[f64], f64) -> Result<f64, HeatError>,
{
    if !(h > 0.0 && h < t) {
        return Err(HeatError::BadStep { h, t });
    }
    let dt = (f(x, t + h)? - f(x, t - h)?) / (2.0 * h);
    let centre = f(x, t)?;
    let mut lap = 0.0;
    let mut y = x.to_vec();
    for k in 0..x.len() {
        y[k] = x[k] + h;
        let up = f(&y, t)?;
        y[k] = x[k] - h;
        let down = f(&y, t)?;
        y[k] = x[k];
        lap += (up - 2.0 * centre + down) / (h * h);
    }
    Ok(dt - c * lap)
}

/// [`heat_residual_of`] applied to `rho_tilde_t`.
pub fn heat_residual(x: &[f64], t: f64, h: f64) -> Result<f64, HeatError> {
    heat_residual_of(rho_tilde_t, x, t, h)
}

/// Observed order `log₂(|r(h)| / |r(h/2)|)` for successive steps.
pub fn observed_orders(residuals: &[f64]) -> Vec<f64> {
    residuals.windows(2).map(|w| (w[0].abs() / w[1].abs()).log2()).collect()
}

/// Tolerance for the projector checks.
const PROJECTOR_TOL: f64 = 1e-12;

/// `Φ_t(x|P) = (2πt)^{−rank P/2} e^{−⟨x, Px⟩/2t}` for a symmetric idempotent
/// `P`; solves `∂_t = ½ Δ`.
pub fn projector_solution(p: &RealSquareMatrix, t: f64, x: &[f64]) -> Result<f64, HeatError> {
    check_time(t)?;
    let n = p.dim();
    if x.len() != n {
        return Err(HeatError::Dimension { expected: n, got: x.len() });
    }
    let defect = p.matmul(p).as_slice().iter().zip(p.as_slice()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let asym = p.as_slice().iter().zip(p.transpose().as_slice()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if defect.max(asym) > PROJECTOR_TOL {
        return Err(HeatError::NotProjector(defect.max(asym)));
    }
    let rank = p.trace().round();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += x[i] * p[(i, j)] * x[j];
        }
    }
    Ok((2.0 * PI * t).powf(-rank / 2.0) * (-q / (2.0 * t)).exp())
}

/// Orthonormal basis of the `K²`-dimensional real space of Hermitian
/// `K × K` matrices under `⟨A, B⟩ = Tr AB`.
pub fn hermitian_basis(k: usize) -> Vec<ComplexSquareMatrix> {
    let mut out = Vec::with_capacity(k * k);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..k {
        let mut e = ComplexSquareMatrix::zeros(k);
        e[(i, i)] = Complex64::new(1.0, 0.0);
        out.push(e);
    }
    for i in 0..k {
        for j in i + 1..k {
            let mut s = ComplexSquareMatrix::zeros(k);
            s[(i, j)] = Complex64::new(r, 0.0);
            s[(j, i)] = Complex64::new(r, 0.0);
            out.push(s);
            let mut a = ComplexSquareMatrix::zeros(k);
            a[(i, j)] = Complex64::new(0.0, r);
            a[(j, i)] = Complex64::new(0.0, -r);
            out.push(a);
        }
    }
    out
}

/// `P_W(H) = H + W Hᵀ W̄` for skew-symmetric unitary `W`.
pub fn p_w(w: &ComplexSquareMatrix, h: &ComplexSquareMatrix) -> ComplexSquareMatrix {
    h.add(&w.matmul(&h.transpose()).matmul(&w.conj()))
}

/// Matrix of `P_W / 2` in [`hermitian_basis`], with `W = U J Uᵀ`.
pub fn half_p_w_matrix(u: &HaarUnitary) -> Result<RealSquareMatrix, HeatError> {
    let w = to_skew_unitary(u)?.w;
    let basis = hermitian_basis(w.dim());
    let n = basis.len();
    let mut m = RealSquareMatrix::zeros(n);
    for (j, bj) in basis.iter().enumerate() {
        let img = p_w(&w, bj);
        for (i, bi) in basis.iter().enumerate() {
            m[(i, j)] = 0.5 * bi.matmul(&img).trace().re;
        }
    }
    Ok(m)
}

/// A smooth, rapidly decaying test function on `ℝ²` with its exact pairing
/// against `δ′(x₂ − x₁)`, i.e. `∫ ∂_u φ(v, v + u)|_{u=0} dv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `(x₂ − x₁) e^{−x₁² − x₂²}`, odd under the swap; pairing `√(π/2)`.
    Odd,
    /// `(1 + x₁x₂) e^{−x₁² − x₂²}`, even under the swap; pairing 0.
    Even,
    /// Narrow bump at `(−1, 1)`, away from the diagonal; pairing 0 up to `e^{−100}`.
    OffDiagonal,
    /// `e^{−x₁²/10⁴}` with no decay in `x₂`: rejected.
    Flat,
}

impl TestFunction {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Self::Odd => (x2 - x1) * (-x1 * x1 - x2 * x2).exp(),
            Self::Even => (1.0 + x1 * x2) * (-x1 * x1 - x2 * x2).exp(),
            Self::OffDiagonal => (-((x1 + 1.0).powi(2) + (x2 - 1.0).powi(2)) / 0.02).exp(),
            Self::Flat => (-x1 * x1 / 1e4).exp(),
        }
    }

    pub fn delta_prime_pairing(&self) -> f64 {
        match self {
            Self::Odd => (PI / 2.0).sqrt(),
            _ => 0.0,
        }
    }
}

/// Box outside of which test functions must be negligible.
const TEST_RADIUS: f64 = 7.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairingRow {
    pub t: f64,
    pub pairing: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialConditionReport {
    pub test_function: TestFunction,
    pub rows: Vec<PairingRow>,
    /// Richardson extrapolation `2 p(t_last) − p(t_prev)` assuming `O(t)`.
    pub extrapolated: f64,
    /// `∫ ∂_u φ(v, v + u)|_{u=0} dv`.
    pub delta_prime: f64,
    /// `extrapolated / delta_prime` when the latter is nonzero.
    pub measured_constant: Option<f64>,
    /// Ratios of successive errors against the extrapolated limit.
    pub error_ratios: Vec<f64>,
}

/// `∫∫ rho_tilde_t(x₁, x₂) φ(x₁, x₂) dx`, integrating in `v = x₁`,
/// `u = x₂ − x₁` with the `u`-rule scaled to the kernel width `√t`.
pub fn pairing(phi: TestFunction, t: f64) -> Result<f64, HeatError> {
    check_time(t)?;
    let edge = [
        phi.eval(TEST_RADIUS, 0.0),
        phi.eval(0.0, TEST_RADIUS),
        phi.eval(-TEST_RADIUS, 0.0),
        phi.eval(0.0, -TEST_RADIUS),
    ]
    .iter()
    .fold(0.0f64, |m, v| m.max(v.abs()));
    if edge > 1e-15 {
        return Err(HeatError::NonDecaying { value: edge, radius: TEST_RADIUS });
    }
    let c = c_k(2)? / 2.0;
    let s = (2.0 * t).sqrt();
    // g'_{2t} is negligible beyond |u| = 12 √(t/2)·2
    let ur = Composite::new(-12.0 * s, 12.0 * s, 24, 20);
    let vr = Composite::new(-TEST_RADIUS, TEST_RADIUS, 56, 20);
    Ok(c * vr.integrate(|v| ur.integrate(|u| g_prime(2.0 * t, -u) * phi.eval(v, v + u))))
}

/// Pairings at each `t` of `t_sequence` (decreasing) and their limit.
pub fn initial_condition_check(phi: TestFunction, t_sequence: &[f64]) -> Result<InitialConditionReport, HeatError> {
    let rows: Vec<PairingRow> =
        t_sequence.iter().map(|&t| Ok(PairingRow { t, pairing: pairing(phi, t)? })).collect::<Result<_, HeatError>>()?;
    let n = rows.len();
    let extrapolated = if n >= 2 {
        let (a, b) = (&rows[n - 2], &rows[n - 1]);
        // linear in t through the last two points
        (b.pairing * a.t - a.pairing * b.t) / (a.t - b.t)
    } else {
        rows.last().map_or(0.0, |r| r.pairing)
    };
    let delta_prime = phi.delta_prime_pairing();
    let errs: Vec<f64> = rows.iter().map(|r| (r.pairing - extrapolated).abs()).collect();
    let error_ratios = errs.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(InitialConditionReport {
        test_function: phi,
        rows,
        extrapolated,
        delta_prime,
        measured_constant: (delta_prime != 0.0).then(|| extrapolated / delta_prime),
        error_ratios,
    })
}

/// `∫ g_t(y₁ − x) g_t′(y₂ − x) dx` by quadrature.
pub fn convolution_surrogate(y1: f64, y2: f64, t: f64) -> Result<f64, HeatError> {
    check_time(t)?;
    let w = 12.0 * (t / 4.0).sqrt();
    let lo = y1.min(y2) - w;
    let hi = y1.max(y2) + w;
    let rule = Composite::new(lo, hi, 40, 20);
    Ok(rule.integrate(|x| g(t, y1 - x).unwrap_or(0.0) * g_prime(t, y2 - x)))
}

/// `κ` in `rho_tilde_t = κ C₂ ∫ g_t(y₁ − x) g_t′(y₂ − x) dx`: `−1/2`.
pub const CONVOLUTION_CONSTANT: f64 = -0.5;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::haar_unitary;
    use crate::kernel::rho_tilde;
    use crate::quadrature::integrate;
    use crate::sampler::stream_rng;

    #[test]
    fn kernel_normalization_and_variance() {
        for t in [0.1f64, 1.0, 10.0] {
            let w = 20.0 * t.sqrt();
            let mass = integrate(|x| g(t, x).unwrap(), -w, w, 40);
            assert!((mass - 1.0).abs() < 1e-12);
            let var = integrate(|x| x * x * g(t, x).unwrap(), -w, w, 40);
            assert!((var - t / 4.0).abs() < 1e-12 * t);
        }
        assert_eq!(g(0.0, 1.0), Err(HeatError::BadTime(0.0)));
    }

    #[test]
    fn kernel_solves_heat_equation() {
        let f = |x: &[f64], t: f64| g(t, x[0]);
        let r: Vec<f64> =
            [0.02, 0.01, 0.005].iter().map(|&h| heat_residual_of(f, &[0.3], 0.7, h).unwrap()).collect();
        for o in observed_orders(&r) {
            assert!(o > 1.9, "{r:?}");
        }
    }

    #[test]
    fn unit_time_reduces_to_kernel() {
        for x in [vec![-0.3, 0.4], vec![-1.0, 0.1, 0.3, 1.2]] {
            let a = rho_tilde_t(&x, 1.0).unwrap();
            let b = rho_tilde(&x).unwrap() * unit_time_ratio(x.len());
            assert!((a - b).abs() < 1e-14 * a.abs(), "{a} {b}");
        }
    }

    #[test]
    fn antisymmetry_and_diffusive_scaling() {
        let x = [-0.7, 0.2, 0.5, 1.1];
        let a = rho_tilde_t(&x, 0.6).unwrap();
        let b = rho_tilde_t(&[0.2, -0.7, 0.5, 1.1], 0.6).unwrap();
        assert!((a + b).abs() < 1e-15 * a.abs());
        let lam: f64 = 2.3;
        let xs: Vec<f64> = x.iter().map(|v| v * lam.sqrt()).collect();
        let c = rho_tilde_t(&xs, lam * 0.6).unwrap();
        assert!((c - lam.powf(-2.0) * a).abs() < 1e-13 * a.abs());
        // both sides of the integral representation scale the same way
        let d = integral_form(&x, 0.6).unwrap() * integral_form_constant(4).unwrap();
        assert!((d - a).abs() < 1e-13 * a.abs());
    }

    #[test]
    fn residual_is_second_order() {
        for x in [vec![-0.2, 0.5], vec![-0.8, -0.1, 0.4, 1.0]] {
            let r: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&h| heat_residual(&x, 1.0, h).unwrap()).collect();
            for o in observed_orders(&r) {
                assert!(o > 1.9, "{x:?}: {r:?}");
            }
        }
        assert!(heat_residual(&[0.1, 0.8], 1.0, 1e-3).unwrap().abs() < 1e-6);
        assert!(matches!(heat_residual(&[0.0, 1.0], 0.01, 0.02), Err(HeatError::BadStep { .. })));
    }

    #[test]
    fn projector_gaussians() {
        let id = RealSquareMatrix::identity(3);
        let x = [0.3, -0.2, 0.5];
        let v = projector_solution(&id, 0.7, &x).unwrap();
        let q: f64 = x.iter().map(|a| a * a).sum();
        assert!((v - (2.0 * PI * 0.7f64).powf(-1.5) * (-q / 1.4).exp()).abs() < 1e-15);
        let c = 0.6f64.cos();
        let s = 0.6f64.sin();
        let p = RealSquareMatrix::from_rows(&[vec![c * c, c * s], vec![c * s, s * s]]).unwrap();
        let f = |y: &[f64], t: f64| projector_solution(&p, t, y);
        let r: Vec<f64> =
            [0.02, 0.01, 0.005].iter().map(|&h| heat_residual_with(f, &[0.4, -0.1], 0.5, h, 0.5).unwrap()).collect();
        for o in observed_orders(&r) {
            assert!(o > 1.9, "{r:?}");
        }
        let bad = RealSquareMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(projector_solution(&bad, 1.0, &[0.0, 0.0]), Err(HeatError::NotProjector(_))));
    }

    #[test]
    fn half_p_w_is_a_projector_of_rank_three() {
        for i in 0..20 {
            let u = haar_unitary(2, &mut stream_rng(4, i)).unwrap();
            let p = half_p_w_matrix(&u).unwrap();
            let p2 = p.matmul(&p);
            let d = p2.as_slice().iter().zip(p.as_slice()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(d < 1e-12);
            assert!((p.trace() - 3.0).abs() < 1e-12);
            assert!(projector_solution(&p, 1.0, &[0.1, 0.2, 0.3, 0.4]).is_ok());
        }
        let u = haar_unitary(4, &mut stream_rng(4, 99)).unwrap();
        assert!((half_p_w_matrix(&u).unwrap().trace() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn pairings_converge() {
        let ts = [0.1, 0.05, 0.025];
        let odd = initial_condition_check(TestFunction::Odd, &ts).unwrap();
        let c = odd.measured_constant.unwrap();
        assert!((c - c_k(2).unwrap() / 2.0).abs() < 1e-3, "{odd:?}");
        let even = initial_condition_check(TestFunction::Even, &ts).unwrap();
        assert!(even.rows.iter().all(|r| r.pairing.abs() < 1e-12), "{even:?}");
        let off = initial_condition_check(TestFunction::OffDiagonal, &ts).unwrap();
        assert!(off.rows.last().unwrap().pairing.abs() < 1e-20);
        assert!(matches!(pairing(TestFunction::Flat, 0.1), Err(HeatError::NonDecaying { .. })));
    }

    #[test]
    fn convolution_matches_pfaffian() {
        for (y1, y2, t) in [(-0.3, 0.4, 0.5), (0.0, 1.2, 2.0), (0.7, 0.1, 0.2)] {
            let a = rho_tilde_t(&[y1, y2], t).unwrap();
            let b = CONVOLUTION_CONSTANT * c_k(2).unwrap() * convolution_surrogate(y1, y2, t).unwrap();
            assert!((a - b).abs() < 1e-8 * a.abs().max(1e-300), "{a} {b}");
        }
    }
}
