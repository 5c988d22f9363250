//! Critical-point data of the phase `F_X(W)` on the skew-symmetric
//! unitaries: critical tori are indexed by perfect matchings of the points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phase::{cis_over, Dd};
use crate::pfaffian::{enumerate_matchings, inversions, pfaffian, Matching, PfaffianError, SkewComplexMatrix};
use crate::points::{vandermonde, PointConfig, PointError};

/// `1/i`: every oscillatory exponent is built as `(1/(it))·(…)` with this
/// value on the principal branch, `1/(it) = −i/t`.
pub const INV_I: Complex64 = Complex64::new(0.0, -1.0);

/// Largest number of points accepted by [`find_max_matching`] and the
/// exhaustive sums.
pub const MAX_POINTS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum StationaryError {
    #[error("matching covers {matching} points but the configuration has {points}")]
    Size { matching: usize, points: usize },
    #[error("need an even number of points, got {0}")]
    OddCount(usize),
    #[error("{0} points exceed the exhaustive limit")]
    TooLarge(usize),
    #[error("degenerate configuration: zero Hessian eigenvalue for {0}")]
    Degenerate(String),
    #[error("critical values of {0} and {1} tie")]
    Tie(String, String),
    #[error("t must be positive and finite, got {0}")]
    BadTime(f64),
    #[error(transparent)]
    Points(#[from] PointError),
    #[error(transparent)]
    Pfaffian(#[from] PfaffianError),
}

fn check(m: &Matching, cfg: &PointConfig) -> Result<(), StationaryError> {
    if 2 * m.len() != cfg.len() {
        return Err(StationaryError::Size { matching: 2 * m.len(), points: cfg.len() });
    }
    Ok(())
}

fn check_even(cfg: &PointConfig) -> Result<(), StationaryError> {
    if !cfg.len().is_multiple_of(2) {
        return Err(StationaryError::OddCount(cfg.len()));
    }
    if cfg.len() > MAX_POINTS {
        return Err(StationaryError::TooLarge(cfg.len()));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<(), StationaryError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(StationaryError::BadTime(t))
    }
}

/// `sign(σ) Π_k (x_{j_k} − x_{i_k}) e^{2 x_{i_k} x_{j_k}/(it)}`.
fn torus_term(m: &Matching, x: &[f64], t: f64) -> Complex64 {
    let mut term = Complex64::new(f64::from(m.sign()), 0.0);
    for &(i, j) in m.pairs() {
        let (a, b) = (x[i - 1], x[j - 1]);
        // 2ab/(it) = −i·2ab/t
        term *= (b - a) * cis_over(Dd::prod(a, b).scale(-2.0), t);
    }
    term
}

/// `F_X(σ) = 2 Σ_k x_{i_k} x_{j_k}`.
pub fn critical_value(m: &Matching, cfg: &PointConfig) -> Result<f64, StationaryError> {
    check(m, cfg)?;
    let x = cfg.points();
    Ok(2.0 * m.pairs().iter().map(|&(i, j)| x[i - 1] * x[j - 1]).sum::<f64>())
}

/// Matching with the largest critical value, by exhaustive search.
pub fn find_max_matching(cfg: &PointConfig) -> Result<Matching, StationaryError> {
    check_even(cfg)?;
    let mut scored: Vec<(f64, Matching)> = enumerate_matchings(cfg.len())?
        .into_iter()
        .map(|m| Ok((critical_value(&m, cfg)?, m)))
        .collect::<Result<_, StationaryError>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    if let [first, second, ..] = scored.as_slice() {
        let scale = cfg.points().iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
        if first.0 - second.0 <= 1e-12 * scale {
            return Err(StationaryError::Tie(first.1.to_string(), second.1.to_string()));
        }
    }
    Ok(scored.swap_remove(0).1)
}

/// Replaces pairs `k` and `l` (0-based) of `m` by `{i_k, i_l}` and
/// `{j_k, j_l}`. Returns the new matching and the predicted change of the
/// critical value, `2 (x_{i_k} − x_{j_l})(x_{i_l} − x_{j_k})`.
pub fn rematch(m: &Matching, k: usize, l: usize, cfg: &PointConfig) -> Result<(Matching, f64), StationaryError> {
    check(m, cfg)?;
    let x = cfg.points();
    let p = m.pairs();
    let ((ik, jk), (il, jl)) = (p[k], p[l]);
    let mut pairs: Vec<(usize, usize)> = p.to_vec();
    pairs[k] = (ik, il);
    pairs[l] = (jk, jl);
    let gain = 2.0 * (x[ik - 1] - x[jl - 1]) * (x[il - 1] - x[jk - 1]);
    Ok((Matching::new(pairs)?, gain))
}

/// First rematch of two pairs that strictly increases the critical value.
pub fn improving_rematch(m: &Matching, cfg: &PointConfig) -> Result<Option<(Matching, f64)>, StationaryError> {
    for k in 0..m.len() {
        for l in k + 1..m.len() {
            let (r, gain) = rematch(m, k, l, cfg)?;
            if gain > 0.0 {
                return Ok(Some((r, gain)));
            }
        }
    }
    Ok(None)
}

/// Hessian of `F_X` on the normal space of the torus of `m`: for each
/// `k < l` the eigenvalues `2(x_{i_k} − x_{j_l})(x_{i_l} − x_{j_k})` and
/// `2(x_{i_k} − x_{i_l})(x_{j_l} − x_{j_k})`, each of multiplicity 2.
pub fn hessian_spectrum(m: &Matching, cfg: &PointConfig) -> Result<Vec<(f64, usize)>, StationaryError> {
    check(m, cfg)?;
    let x = |v: usize| cfg.points()[v - 1];
    let p = m.pairs();
    let mut out = Vec::with_capacity(p.len() * p.len().saturating_sub(1));
    for k in 0..p.len() {
        for l in k + 1..p.len() {
            let ((ik, jk), (il, jl)) = (p[k], p[l]);
            out.push((2.0 * (x(ik) - x(jl)) * (x(il) - x(jk)), 2));
            out.push((2.0 * (x(ik) - x(il)) * (x(jl) - x(jk)), 2));
        }
    }
    Ok(out)
}

/// `#positive − #negative` Hessian eigenvalues, with multiplicity.
pub fn signature(m: &Matching, cfg: &PointConfig) -> Result<i64, StationaryError> {
    let spec = hessian_spectrum(m, cfg)?;
    if spec.iter().any(|(v, _)| *v == 0.0) {
        return Err(StationaryError::Degenerate(m.to_string()));
    }
    Ok(spec.iter().map(|&(v, mult)| if v > 0.0 { mult as i64 } else { -(mult as i64) }).sum())
}

/// `4 inv(σ) − 2K(K−1)` for a matching of `2K` points.
pub fn predicted_signature(m: &Matching) -> i64 {
    let k = m.len() as i64;
    4 * inversions(m) as i64 - 2 * k * (k - 1)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HessianDet {
    /// `√|det|` of the Hessian on the normal space.
    pub value: f64,
    /// `V(x) / Π_k (x_{j_k} − x_{i_k})`, which equals the product of the
    /// unscaled factors in absolute value.
    pub vandermonde_ratio: f64,
    /// `log₂(value / vandermonde_ratio)`.
    pub measured_two_power: f64,
    /// `K(K−1)`, one factor 2 per distinct eigenvalue.
    pub eigenvalue_two_power: u32,
    /// `2K(K−1)`, the power written alongside the determinant formula.
    pub stated_two_power: u32,
}

/// `√|det Hess|`, together with the Vandermonde-ratio identity it obeys.
pub fn sqrt_abs_hessian_det(m: &Matching, cfg: &PointConfig) -> Result<HessianDet, StationaryError> {
    let spec = hessian_spectrum(m, cfg)?;
    if spec.iter().any(|(v, _)| *v == 0.0) {
        return Err(StationaryError::Degenerate(m.to_string()));
    }
    // multiplicity 2 per entry: the square root keeps one copy
    let value: f64 = spec.iter().map(|(v, _)| v.abs()).product();
    let x = cfg.points();
    let pair_diffs: f64 = m.pairs().iter().map(|&(i, j)| x[j - 1] - x[i - 1]).product();
    let vandermonde_ratio = (vandermonde(x) / pair_diffs).abs();
    let k = m.len() as u32;
    Ok(HessianDet {
        value,
        vandermonde_ratio,
        measured_two_power: (value / vandermonde_ratio).log2(),
        eigenvalue_two_power: k * k.saturating_sub(1),
        stated_two_power: 2 * k * k.saturating_sub(1),
    })
}

/// Sum over critical tori, assembled with the same prefactors as the
/// Pfaffian side:
/// `t^{K(K−1)} Π_m e^{−x_m²/(it)} Σ_σ sign(σ) Π_k (x_{j_k} − x_{i_k}) e^{2 x_{i_k} x_{j_k}/(it)} / V(x)`.
pub fn stationary_phase_sum(cfg: &PointConfig, t: f64) -> Result<Complex64, StationaryError> {
    check_even(cfg)?;
    check_time(t)?;
    let x = cfg.points();
    let k = x.len() / 2;
    let mut sum = Complex64::new(0.0, 0.0);
    for m in enumerate_matchings(x.len())? {
        sum += torus_term(&m, x, t);
    }
    // Π_m e^{−x_m²/(it)} = e^{i Σ x_m² / t}
    let squares = x.iter().fold(Dd::default(), |acc, &v| acc.add(Dd::prod(v, v)));
    Ok(t.powi((k * (k - 1)) as i32) * cis_over(squares, t) * sum / vandermonde(x))
}

/// `Σ_σ |term_σ| / |Σ_σ term_σ|` for the sum in [`stationary_phase_sum`]:
/// the factor by which rounding errors in the terms are amplified.
pub fn stationary_phase_condition(cfg: &PointConfig, t: f64) -> Result<f64, StationaryError> {
    check_even(cfg)?;
    check_time(t)?;
    let x = cfg.points();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    for m in enumerate_matchings(x.len())? {
        let term = torus_term(&m, x, t);
        sum += term;
        abs += term.norm();
    }
    Ok(abs / sum.norm())
}

/// `Pf[((x_j − x_i)/√t) e^{−(x_i − x_j)²/(it)}] / V(x/√t)`.
pub fn oscillatory_pfaffian_ratio(cfg: &PointConfig, t: f64) -> Result<Complex64, StationaryError> {
    check_even(cfg)?;
    check_time(t)?;
    let s = t.sqrt();
    let x = cfg.points();
    let y: Vec<f64> = x.iter().map(|v| v / s).collect();
    // e^{−d²/i} = e^{i d²}, with the phase (x_j − x_i)²/t reduced accurately
    let a = SkewComplexMatrix::from_upper(y.len(), |i, j| {
        (x[j] - x[i]) / s * cis_over(Dd::diff(x[j], x[i]).square(), t)
    })?;
    Ok(pfaffian(&a) / vandermonde(&y))
}

/// Displayed small-`t` leading term without its constant:
/// `Π_k (x_{2k} − x_{2k−1}) / V(x) · e^{−Σ_k (x_{2k} − x_{2k−1})²/t}`.
pub fn laplace_leading(cfg: &PointConfig, t: f64) -> Result<f64, StationaryError> {
    check_even(cfg)?;
    check_time(t)?;
    let x = cfg.points();
    let mut prod = 1.0;
    let mut expo = 0.0;
    for p in x.chunks(2) {
        let d = p[1] - p[0];
        prod *= d;
        expo += d * d;
    }
    Ok(prod / vandermonde(x) * (-expo / t).exp())
}

/// Power of `t` separating the exact answer from [`laplace_leading`]: with
/// `P` points the dominant Pfaffian term carries `t^{P(P−2)/4}`.
pub fn laplace_t_power(points: usize) -> f64 {
    let p = points as f64;
    p * (p - 2.0) / 4.0
}

/// One row of the per-matching table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalDatum {
    pub matching: Matching,
    pub critical_value: f64,
    pub hessian_eigenvalues: Vec<(f64, usize)>,
    pub signature: i64,
    pub inversions: usize,
    pub sqrt_abs_det: f64,
}

/// [`CriticalDatum`] for every matching of the configuration.
pub fn critical_data(cfg: &PointConfig) -> Result<Vec<CriticalDatum>, StationaryError> {
    check_even(cfg)?;
    enumerate_matchings(cfg.len())?
        .into_iter()
        .map(|m| {
            Ok(CriticalDatum {
                critical_value: critical_value(&m, cfg)?,
                hessian_eigenvalues: hessian_spectrum(&m, cfg)?,
                signature: signature(&m, cfg)?,
                inversions: inversions(&m),
                sqrt_abs_det: sqrt_abs_hessian_det(&m, cfg)?.value,
                matching: m,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::stream_rng;
    use rand::Rng;

    fn cfg(x: &[f64]) -> PointConfig {
        PointConfig::new(x.to_vec()).unwrap()
    }

    fn random_ordered(n: usize, seed: u64) -> PointConfig {
        let mut rng = stream_rng(seed, 0);
        let (x, _) = PointConfig::sorted(&(0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>()).unwrap();
        x
    }

    fn m(p: &[(usize, usize)]) -> Matching {
        Matching::new(p.iter().copied()).unwrap()
    }

    #[test]
    fn critical_values_by_hand() {
        let x = cfg(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(critical_value(&m(&[(1, 2), (3, 4)]), &x).unwrap(), 28.0);
        assert_eq!(critical_value(&m(&[(1, 4), (2, 3)]), &x).unwrap(), 20.0);
        assert_eq!(critical_value(&m(&[(1, 3), (2, 4)]), &x).unwrap(), 22.0);
        assert_eq!(find_max_matching(&x).unwrap(), Matching::adjacent(2));
        assert!(matches!(critical_value(&Matching::adjacent(3), &x), Err(StationaryError::Size { .. })));
    }

    #[test]
    fn near_coincident_points_tie() {
        // For ordered points the gap between the two best critical values is
        // (x_4 − x_1)(x_3 − x_2); here it drowns in rounding.
        let x = cfg(&[1.0, 1.0 + 1e-7, 1.0 + 2e-7, 1.0 + 3e-7]);
        assert!(matches!(find_max_matching(&x), Err(StationaryError::Tie(_, _))));
        assert!(find_max_matching(&cfg(&[1.0, 1.1, 1.2, 1.3])).is_ok());
    }

    #[test]
    fn hessian_by_hand() {
        let x = cfg(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(hessian_spectrum(&Matching::adjacent(2), &x).unwrap(), vec![(-6.0, 2), (-8.0, 2)]);
        assert_eq!(signature(&m(&[(1, 2), (3, 4)]), &x).unwrap(), -4);
        assert_eq!(signature(&m(&[(1, 3), (2, 4)]), &x).unwrap(), 0);
        assert_eq!(signature(&m(&[(1, 4), (2, 3)]), &x).unwrap(), 4);
        let d = sqrt_abs_hessian_det(&Matching::adjacent(2), &x).unwrap();
        assert_eq!(d.vandermonde_ratio, 12.0);
        assert_eq!(d.value, 48.0);
        assert_eq!(d.measured_two_power, 2.0);
    }

    #[test]
    fn signature_formula_exhaustive() {
        for n in [4, 6, 8] {
            for seed in 0..5 {
                let x = random_ordered(n, seed);
                for mm in enumerate_matchings(n).unwrap() {
                    assert_eq!(signature(&mm, &x).unwrap(), predicted_signature(&mm), "{mm}");
                    assert_eq!(hessian_spectrum(&mm, &x).unwrap().iter().map(|e| e.1).sum::<usize>(), n / 2 * (n / 2 - 1) * 2);
                }
            }
        }
    }

    #[test]
    fn determinant_identity_and_scaling() {
        let x = random_ordered(6, 3);
        for mm in enumerate_matchings(6).unwrap() {
            let d = sqrt_abs_hessian_det(&mm, &x).unwrap();
            let k = 3.0f64;
            assert!((d.value / d.vandermonde_ratio - 2f64.powf(k * (k - 1.0))).abs() < 1e-12 * d.value / d.vandermonde_ratio);
            let lam = 1.7;
            let dl = sqrt_abs_hessian_det(&mm, &x.scaled(lam)).unwrap();
            assert!((dl.value - lam.powi(12) * d.value).abs() < 1e-12 * dl.value);
        }
    }

    #[test]
    fn max_matching_and_rematch() {
        for seed in 0..200 {
            let n = [4, 6, 8][seed as usize % 3];
            let x = random_ordered(n, 100 + seed);
            assert_eq!(find_max_matching(&x).unwrap(), Matching::adjacent(n / 2));
            for mm in enumerate_matchings(n).unwrap() {
                match improving_rematch(&mm, &x).unwrap() {
                    None => assert_eq!(mm, Matching::adjacent(n / 2)),
                    Some((r, gain)) => {
                        let direct = critical_value(&r, &x).unwrap() - critical_value(&mm, &x).unwrap();
                        assert!((direct - gain).abs() < 1e-12 * direct.abs().max(1.0));
                        assert!(direct > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn stationary_sum_equals_pfaffian() {
        for (n, seed) in [(2, 0), (4, 1), (4, 2), (6, 3), (6, 4), (8, 5)] {
            let x = random_ordered(n, seed);
            for t in [0.05, 0.1] {
                let a = stationary_phase_sum(&x, t).unwrap();
                let b = oscillatory_pfaffian_ratio(&x, t).unwrap();
                assert!((a - b).norm() < 1e-12 * b.norm(), "n = {n}, t = {t}: {a} vs {b}");
            }
            // at larger t the sum cancels heavily; the agreement is then
            // limited by rounding amplified by the condition number
            for t in [0.3, 1.0, 2.5] {
                let a = stationary_phase_sum(&x, t).unwrap();
                let b = oscillatory_pfaffian_ratio(&x, t).unwrap();
                let cond = stationary_phase_condition(&x, t).unwrap();
                assert!((a - b).norm() < 1e-13 * cond * b.norm(), "n = {n}, t = {t}, cond = {cond:e}");
            }
        }
        // covariance under x → λx, t → λ²t
        let x = random_ordered(6, 9);
        let a = oscillatory_pfaffian_ratio(&x, 0.4).unwrap();
        let b = oscillatory_pfaffian_ratio(&x.scaled(2.0), 1.6).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn laplace_exponent_completes_the_square() {
        let x = cfg(&[-0.7, 0.1, 0.4, 1.3]);
        let t = 0.3;
        let lhs: f64 = 2.0 / t * (x.points()[0] * x.points()[1] + x.points()[2] * x.points()[3])
            - x.points().iter().map(|v| v * v).sum::<f64>() / t;
        let rhs = -((0.8f64).powi(2) + 0.9f64.powi(2)) / t;
        assert!((lhs - rhs).abs() < 1e-13);
        let two = cfg(&[0.2, 0.9]);
        assert!((laplace_leading(&two, 0.1).unwrap() - (-0.49f64 / 0.1).exp()).abs() < 1e-15);
        assert_eq!(laplace_t_power(4), 2.0);
    }

    #[test]
    fn critical_table() {
        let rows = critical_data(&random_ordered(6, 1)).unwrap();
        assert_eq!(rows.len(), 15);
        let best = rows.iter().max_by(|a, b| a.critical_value.total_cmp(&b.critical_value)).unwrap();
        assert_eq!(best.matching, Matching::adjacent(3));
        assert_eq!(best.signature, -12);
    }
}
