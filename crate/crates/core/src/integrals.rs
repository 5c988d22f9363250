//! Matrix integrals over `U(K)` and over the skew-symmetric unitaries
//! `aU(K)`, with a Hubbard–Stratonovich quadrature for two-point
//! characteristic polynomial moments.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{complex_qr, ComplexSquareMatrix, LinalgError};
use crate::pfaffian::{pfaffian, CanonicalSymplectic, PfaffianError, SkewComplexMatrix};
use crate::points::{sort_with_parity, PointError};
use crate::quadrature::Composite;
use crate::sampler::{stream_rng, Estimate, Moments};

#[derive(Debug, Error, PartialEq)]
pub enum IntegralError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("need an even number of points, got {0}")]
    OddCount(usize),
    #[error("t must be positive and finite, got {0}")]
    BadTime(f64),
    #[error("operation is only defined for K = 2, got K = {0}")]
    NotTwo(usize),
    #[error("n = {n} exceeds the supported maximum {max}")]
    TooLarge { n: usize, max: usize },
    #[error("quadrature did not converge (relative change {change:e})")]
    NoConvergence { change: f64 },
    #[error("at least 2 samples are required")]
    TooFewSamples,
    #[error("fit reference value is zero or not finite")]
    DegenerateFit,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Pfaffian(#[from] PfaffianError),
    #[error(transparent)]
    Points(#[from] PointError),
}

/// Sign making [`exact_shape`] positive relative to `I_t`: `(−1)^{K/2}`.
pub fn exact_shape_orientation(k: usize) -> f64 {
    if (k / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Largest `n` accepted by [`hs_charpoly_oracle`].
pub const HS_MAX_N: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct HaarUnitary {
    pub u: ComplexSquareMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewUnitary {
    pub w: ComplexSquareMatrix,
}

fn complex_gaussian(k: usize, rng: &mut impl Rng) -> Result<ComplexSquareMatrix, LinalgError> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let data = (0..k * k)
        .map(|_| Complex64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    ComplexSquareMatrix::from_row_major(k, data)
}

/// Haar-distributed `U ∈ U(k)`: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary(k: usize, rng: &mut impl Rng) -> Result<HaarUnitary, IntegralError> {
    if k == 0 {
        return Err(IntegralError::ZeroDimension);
    }
    let (mut q, r) = complex_qr(&complex_gaussian(k, rng)?)?;
    for j in 0..k {
        let p = r[(j, j)] / r[(j, j)].norm();
        for i in 0..k {
            q[(i, j)] *= p;
        }
    }
    Ok(HaarUnitary { u: q })
}

/// `W = U J Uᵀ`.
pub fn to_skew_unitary(u: &HaarUnitary) -> Result<SkewUnitary, IntegralError> {
    let k = u.u.dim();
    if !k.is_multiple_of(2) {
        return Err(IntegralError::OddCount(k));
    }
    let j = CanonicalSymplectic::matrix(k)?;
    Ok(SkewUnitary { w: u.u.matmul(&j).matmul(&u.u.transpose()) })
}

impl SkewUnitary {
    pub fn skew(&self) -> Result<SkewComplexMatrix, IntegralError> {
        Ok(SkewComplexMatrix::new(self.w.clone())?)
    }
}

fn check_points(x: &[f64]) -> Result<(), IntegralError> {
    if x.is_empty() {
        return Err(PointError::Empty.into());
    }
    if !x.len().is_multiple_of(2) {
        return Err(IntegralError::OddCount(x.len()));
    }
    if let Some(&bad) = x.iter().find(|p| !p.is_finite()) {
        return Err(PointError::NonFinite(bad).into());
    }
    Ok(())
}

fn check_time(t: f64) -> Result<(), IntegralError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(IntegralError::BadTime(t))
    }
}

/// `H^R = J Hᵀ Jᵀ`.
pub fn symplectic_reflection(h: &ComplexSquareMatrix) -> Result<ComplexSquareMatrix, IntegralError> {
    let j = CanonicalSymplectic::matrix(h.dim())?;
    Ok(j.matmul(&h.transpose()).matmul(&j.transpose()))
}

fn conjugated_diagonal(u: &ComplexSquareMatrix, x: &[f64]) -> ComplexSquareMatrix {
    u.matmul(&ComplexSquareMatrix::from_diagonal(x)).matmul(&u.adjoint())
}

/// `exp(−Tr(H − H^R)² / 2t)` with `H = U X U†`.
pub fn i_t_integrand(u: &HaarUnitary, x: &[f64], t: f64) -> Result<f64, IntegralError> {
    let h = conjugated_diagonal(&u.u, x);
    let d = h.sub(&symplectic_reflection(&h)?);
    Ok((-d.matmul(&d).trace().re / (2.0 * t)).exp())
}

/// Haar Monte Carlo estimate of `I_t(X)`, one stream per draw.
pub fn i_t_mc(x: &[f64], t: f64, samples: usize, seed: u64) -> Result<Estimate, IntegralError> {
    check_points(x)?;
    check_time(t)?;
    if samples < 2 {
        return Err(IntegralError::TooFewSamples);
    }
    let k = x.len();
    let m = crate::sampler::reduce_indexed(
        samples,
        Moments::default,
        |acc, i| {
            let mut rng = stream_rng(seed, i as u64);
            let u = haar_unitary(k, &mut rng)?;
            acc.push(i_t_integrand(&u, x, t)?);
            Ok::<_, IntegralError>(())
        },
        |a, b| a.merge(&b),
    )?;
    Ok(m.estimate(seed))
}

/// `I_t` at `K = 2` from its `aU(2)` form: `W = e^{iθ} J` and
/// `Π e^{−x_k²/t} ∫ e^{Tr(W† X W X)/t} dθ/2π`, periodic trapezoid rule.
pub fn i_t_quadrature_k2(x1: f64, x2: f64, t: f64) -> Result<f64, IntegralError> {
    check_time(t)?;
    check_points(&[x1, x2])?;
    let x = [x1, x2];
    let xm = ComplexSquareMatrix::from_diagonal(&x);
    let j = CanonicalSymplectic::matrix(2)?;
    let nodes = 64;
    let mut sum = 0.0;
    for m in 0..nodes {
        let th = 2.0 * std::f64::consts::PI * m as f64 / nodes as f64;
        let w = j.scale(Complex64::from_polar(1.0, th));
        let tr = w.adjoint().matmul(&xm).matmul(&w).matmul(&xm).trace();
        sum += (tr.re / t).exp();
    }
    let damp = (-(x1 * x1 + x2 * x2) / t).exp();
    Ok(damp * sum / nodes as f64)
}

/// `(−1)^{K/2} Pf[((x_i − x_j)/√t) e^{−(x_i − x_j)²/t}] / V(x/√t)`, the
/// exact `I_t` up to a `K`-dependent constant. Input order is irrelevant.
pub fn exact_shape(x: &[f64], t: f64) -> Result<f64, IntegralError> {
    check_points(x)?;
    check_time(t)?;
    let (sorted, _) = sort_with_parity(x);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(PointError::Coincident(w[0]).into());
    }
    let s = t.sqrt();
    let y: Vec<f64> = x.iter().map(|v| v / s).collect();
    let a = SkewComplexMatrix::from_upper_real(y.len(), |i, j| {
        let d = y[i] - y[j];
        d * (-d * d).exp()
    })?;
    Ok(exact_shape_orientation(x.len()) * pfaffian(&a).re / crate::points::vandermonde(&y))
}

/// Haar-form integrand `exp(−Tr(H − H^R)²/2)` with `H = U X U†`, and the
/// `aU(K)` integrand `exp(−Tr(−W† X W Xᵀ + X²))` with `W = U J Uᵀ`, both at
/// `t = 1`.
pub fn theorem1_integrand_equivalence(u: &HaarUnitary, x: &[f64]) -> Result<(f64, f64), IntegralError> {
    check_points(x)?;
    let a = i_t_integrand(u, x, 1.0)?;
    let w = to_skew_unitary(u)?.w;
    let xm = ComplexSquareMatrix::from_diagonal(x);
    let tr = w.adjoint().matmul(&xm).matmul(&w).matmul(&xm.transpose()).trace();
    let x2: f64 = x.iter().map(|v| v * v).sum();
    Ok((a, (tr.re - x2).exp()))
}

/// Integrand of the Hubbard–Stratonovich representation at `K = 2`:
/// `Pf([[Z/√2, X], [−X, Z†/√2]])` with `Z = [[0, z], [−z, 0]]`.
pub fn hs_pfaffian(z: Complex64, x1: f64, x2: f64) -> Result<Complex64, IntegralError> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let zero = Complex64::new(0.0, 0.0);
    let c = |v: f64| Complex64::new(v, 0.0);
    let rows = [
        [zero, z * r, c(x1), zero],
        [-z * r, zero, zero, c(x2)],
        [c(-x1), zero, zero, -z.conj() * r],
        [zero, c(-x2), z.conj() * r, zero],
    ];
    let data = rows.iter().flatten().copied().collect();
    let m = ComplexSquareMatrix::from_row_major(4, data)?;
    Ok(pfaffian(&SkewComplexMatrix::new(m)?))
}

/// `E_n[det(M − x_1) det(M − x_2)]` over GinOE(`n`) as
/// `(−1)^n π^{−1} ∫_ℂ e^{−|z|²} Pf(…)^n d²z`, by Gauss–Legendre in the
/// radius and the trapezoid rule in the angle.
pub fn hs_charpoly_oracle(n: usize, x1: f64, x2: f64) -> Result<f64, IntegralError> {
    if n > HS_MAX_N {
        return Err(IntegralError::TooLarge { n, max: HS_MAX_N });
    }
    check_points(&[x1, x2])?;
    let integrand = |r: f64, th: f64| -> Result<f64, IntegralError> {
        let p = hs_pfaffian(Complex64::from_polar(r, th), x1, x2)?;
        Ok((p.powu(n as u32) * (-r * r).exp()).re * r)
    };
    // |Pf| ≤ r²/2 + |x1 x2|: truncate where the Gaussian tail of the bound
    // falls below 1e−16 of its peak.
    let p0 = (x1 * x2).abs();
    let log_bound = |r: f64| -r * r + n as f64 * (r * r / 2.0 + p0).ln();
    let rpeak = (n as f64 - 2.0 * p0).max(0.0).sqrt();
    let peak = log_bound(rpeak).max(log_bound(0.0));
    let mut rmax = rpeak + 1.0;
    while log_bound(rmax) - peak > (1e-16f64).ln() {
        rmax += 0.5;
    }
    let angles = 16;
    let run = |panels: usize| -> Result<f64, IntegralError> {
        let rule = Composite::new(0.0, rmax, panels, 20);
        let mut err = None;
        let total = rule.integrate(|r| {
            let mut s = 0.0;
            for m in 0..angles {
                let th = 2.0 * std::f64::consts::PI * m as f64 / angles as f64;
                match integrand(r, th) {
                    Ok(v) => s += v,
                    Err(e) => err = Some(e),
                }
            }
            s * 2.0 * std::f64::consts::PI / angles as f64
        });
        match err {
            Some(e) => Err(e),
            None => Ok(total / std::f64::consts::PI),
        }
    };
    let coarse = run(8)?;
    let fine = run(16)?;
    let scale = fine.abs().max(peak.exp());
    let change = (fine - coarse).abs() / scale;
    if change > 1e-10 {
        return Err(IntegralError::NoConvergence { change });
    }
    Ok(if n.is_multiple_of(2) { fine } else { -fine })
}

/// One row of a fit-then-verify table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralRow {
    pub x: Vec<f64>,
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
    pub exact_shape: f64,
    pub fitted_c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    /// Constant fitted at the reference row.
    pub constant: f64,
    /// Largest `|value/exact_shape − constant| / constant` over all rows.
    pub max_rel_dev: f64,
    /// Largest deviation in units of each row's propagated standard error.
    pub max_z: f64,
    pub rows: Vec<IntegralRow>,
}

/// Fits `value = C · exact_shape` at row `reference`, then records how well
/// every other row obeys the same constant.
pub fn fit_then_verify(mut rows: Vec<IntegralRow>, reference: usize) -> Result<FitReport, IntegralError> {
    let r = &rows[reference];
    let constant = r.value / r.exact_shape;
    if !constant.is_finite() || constant == 0.0 {
        return Err(IntegralError::DegenerateFit);
    }
    let mut max_rel_dev: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    for row in &mut rows {
        row.fitted_c = row.value / row.exact_shape;
        let dev = (row.fitted_c - constant).abs();
        max_rel_dev = max_rel_dev.max(dev / constant.abs());
        let se = row.stderr / row.exact_shape.abs();
        if dev > 0.0 {
            max_z = max_z.max(if se > 0.0 { dev / se } else { f64::INFINITY });
        }
    }
    Ok(FitReport { constant, max_rel_dev, max_z, rows })
}
