use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::estimate::Estimate;
use super::ginoe::sample_ginoe;
use super::stream::{reduce_indexed, StreamTag};
use super::SamplerError;

/// Largest number of coordinates accepted by [`estimate_rho_tilde`].
const MAX_COORDS: usize = 4;

/// Histogram estimate of a K-point modified density on a product of bins.
///
/// Cells are stored row-major with the last coordinate varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedDensity {
    pub bin_edges: Vec<Vec<f64>>,
    /// Weighted count per cell divided by samples and cell volume.
    pub weighted_counts: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Factor mapping a raw weighted count in a cell of unit volume to
    /// `weighted_counts`, i.e. `1 / samples`.
    pub normalization: f64,
    pub n_samples: usize,
    /// Samples with at least one tuple inside the bin product.
    pub hits: usize,
    pub seed: u64,
}

impl BinnedDensity {
    pub fn shape(&self) -> Vec<usize> {
        self.bin_edges.iter().map(|e| e.len() - 1).collect()
    }

    fn flat_index(&self, cell: &[usize]) -> usize {
        flat(&self.shape(), cell)
    }

    pub fn cell(&self, cell: &[usize]) -> Estimate {
        let i = self.flat_index(cell);
        Estimate { mean: self.weighted_counts[i], stderr: self.stderr[i], n_samples: self.n_samples, seed: self.seed }
    }

    /// Midpoint of a cell.
    pub fn center(&self, cell: &[usize]) -> Vec<f64> {
        cell.iter().zip(&self.bin_edges).map(|(&c, e)| 0.5 * (e[c] + e[c + 1])).collect()
    }

    pub fn volume(&self, cell: &[usize]) -> f64 {
        cell.iter().zip(&self.bin_edges).map(|(&c, e)| e[c + 1] - e[c]).product()
    }

    /// All cell multi-indices in storage order.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let shape = self.shape();
        let total: usize = shape.iter().product();
        (0..total)
            .map(|mut f| {
                let mut c = vec![0; shape.len()];
                for d in (0..shape.len()).rev() {
                    c[d] = f % shape[d];
                    f /= shape[d];
                }
                c
            })
            .collect()
    }
}

fn flat(shape: &[usize], cell: &[usize]) -> usize {
    cell.iter().zip(shape).fold(0, |acc, (&c, &s)| acc * s + c)
}

fn validate_bins(bins: &[Vec<f64>]) -> Result<(), SamplerError> {
    if bins.is_empty() || bins.len() > MAX_COORDS {
        return Err(SamplerError::Dimension { got: bins.len(), max: MAX_COORDS });
    }
    if !bins.len().is_multiple_of(2) {
        return Err(SamplerError::OddCount(bins.len()));
    }
    for e in bins {
        if e.len() < 2 || e.iter().any(|v| !v.is_finite()) || e.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SamplerError::BadBins);
        }
    }
    for i in 0..bins.len() {
        for j in i + 1..bins.len() {
            let (a, b) = (&bins[i], &bins[j]);
            if a[0] < b[b.len() - 1] && b[0] < a[a.len() - 1] {
                return Err(SamplerError::OverlappingBins(i, j));
            }
        }
    }
    Ok(())
}

/// Bin of `x` in sorted `edges` (half-open cells, last one closed).
fn locate(edges: &[f64], x: f64) -> Option<usize> {
    let last = edges.len() - 1;
    if x < edges[0] || x > edges[last] {
        return None;
    }
    Some(edges.partition_point(|&e| e <= x).clamp(1, last) - 1)
}

/// Per-cell sums of tuple weights for one sorted real spectrum.
fn tuple_weights(ev: &[f64], bins: &[Vec<f64>], shape: &[usize]) -> BTreeMap<usize, f64> {
    // (eigenvalue, bin, spin just left of it) per coordinate
    let cand: Vec<Vec<(f64, usize, f64)>> = bins
        .iter()
        .map(|edges| {
            ev.iter()
                .enumerate()
                .filter_map(|(idx, &l)| locate(edges, l).map(|b| (l, b, if idx % 2 == 0 { 1.0 } else { -1.0 })))
                .collect()
        })
        .collect();
    let mut out = BTreeMap::new();
    if cand.iter().all(|c| !c.is_empty()) {
        visit(&cand, &mut Vec::with_capacity(bins.len()), shape, &mut out);
    }
    out
}

fn visit<'a>(
    cand: &'a [Vec<(f64, usize, f64)>],
    tuple: &mut Vec<&'a (f64, usize, f64)>,
    shape: &[usize],
    out: &mut BTreeMap<usize, f64>,
) {
    let d = tuple.len();
    if d == cand.len() {
        let mut w: f64 = tuple.iter().map(|t| t.2).product();
        for a in 0..d {
            for b in a + 1..d {
                if tuple[b].0 < tuple[a].0 {
                    w = -w;
                }
            }
        }
        let cell: Vec<usize> = tuple.iter().map(|t| t.1).collect();
        *out.entry(flat(shape, &cell)).or_insert(0.0) += w;
        return;
    }
    for c in &cand[d] {
        tuple.push(c);
        visit(cand, tuple, shape, out);
        tuple.pop();
    }
}

struct Acc {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    hits: usize,
}

/// Monte Carlo modified density of GinOE(`n`) on the bin product `bins`
/// (one sorted edge list per coordinate, ranges pairwise disjoint).
///
/// Every ordered tuple of real eigenvalues `(λ_1, …, λ_K)` with `λ_k` in the
/// range of coordinate `k` contributes
/// `sgn V(λ) Π_k (−1)^{#real eigenvalues < λ_k}`. The Vandermonde sign makes
/// the estimate antisymmetric under a swap of coordinate ranges; inside the
/// Weyl chamber it equals one.
pub fn estimate_rho_tilde(n: usize, bins: &[Vec<f64>], samples: usize, seed: u64) -> Result<BinnedDensity, SamplerError> {
    validate_bins(bins)?;
    if samples < 2 {
        return Err(SamplerError::TooFewSamples { got: samples, min: 2 });
    }
    let shape: Vec<usize> = bins.iter().map(|e| e.len() - 1).collect();
    let cells: usize = shape.iter().product();
    let acc = reduce_indexed(
        samples,
        || Acc { sum: vec![0.0; cells], sum_sq: vec![0.0; cells], hits: 0 },
        |acc, i| {
            let s = sample_ginoe(n, StreamTag { seed, index: i as u64 })?;
            let local = tuple_weights(&s.spectrum.real_eigenvalues, bins, &shape);
            if local.is_empty() {
                return Ok(());
            }
            acc.hits += 1;
            for (c, v) in local {
                acc.sum[c] += v;
                acc.sum_sq[c] += v * v;
            }
            Ok::<_, SamplerError>(())
        },
        |a, b| {
            a.sum.iter_mut().zip(&b.sum).for_each(|(x, y)| *x += y);
            a.sum_sq.iter_mut().zip(&b.sum_sq).for_each(|(x, y)| *x += y);
            a.hits += b.hits;
        },
    )?;
    let mut out = BinnedDensity {
        bin_edges: bins.to_vec(),
        weighted_counts: vec![0.0; cells],
        stderr: vec![0.0; cells],
        normalization: 1.0 / samples as f64,
        n_samples: samples,
        hits: acc.hits,
        seed,
    };
    for cell in out.cells() {
        let f = flat(&shape, &cell);
        let vol = out.volume(&cell);
        let e = Estimate::from_sums(acc.sum[f], acc.sum_sq[f], samples, seed);
        out.weighted_counts[f] = e.mean / vol;
        out.stderr[f] = e.stderr / vol;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::modified_density;
    use crate::quadrature::Composite;

    #[test]
    fn locate_bins() {
        let e = [0.0, 1.0, 2.0];
        assert_eq!(locate(&e, -0.1), None);
        assert_eq!(locate(&e, 0.0), Some(0));
        assert_eq!(locate(&e, 1.0), Some(1));
        assert_eq!(locate(&e, 2.0), Some(1));
        assert_eq!(locate(&e, 2.1), None);
    }

    #[test]
    fn rejects_bad_bins() {
        let ov = vec![vec![0.0, 1.0], vec![0.5, 2.0]];
        assert_eq!(estimate_rho_tilde(5, &ov, 10, 0), Err(SamplerError::OverlappingBins(0, 1)));
        let touching = vec![vec![0.0, 1.0], vec![1.0, 2.0]];
        assert!(estimate_rho_tilde(5, &touching, 10, 0).is_ok());
        assert_eq!(estimate_rho_tilde(5, &[vec![1.0, 0.0], vec![2.0, 3.0]], 10, 0), Err(SamplerError::BadBins));
        assert_eq!(estimate_rho_tilde(5, &[vec![0.0, 1.0]], 10, 0), Err(SamplerError::OddCount(1)));
    }

    #[test]
    fn swapping_ranges_flips_sign() {
        let a = vec![-1.0, -0.8, -0.6];
        let b = vec![0.6, 0.8, 1.0];
        let d1 = estimate_rho_tilde(12, &[a.clone(), b.clone()], 3000, 6).unwrap();
        let d2 = estimate_rho_tilde(12, &[b, a], 3000, 6).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(d1.cell(&[i, j]).mean, -d2.cell(&[j, i]).mean);
            }
        }
        assert!(d1.hits > 0);
    }

    #[test]
    fn tuple_weights_on_constructed_spectra() {
        let bins = vec![vec![-5.0, -4.0], vec![3.0, 4.0]];
        let shape = [1, 1];
        // lowest eigenvalue carries +1, the next one −1
        let w = tuple_weights(&[-4.5, 3.5], &bins, &shape);
        assert_eq!(w.get(&0), Some(&-1.0));
        // an eigenvalue between the bins flips the second spin back
        let w = tuple_weights(&[-4.5, 0.0, 3.5], &bins, &shape);
        assert_eq!(w.get(&0), Some(&1.0));
        // swapping the ranges applies sgn V
        let swapped = vec![bins[1].clone(), bins[0].clone()];
        let w = tuple_weights(&[-4.5, 3.5], &swapped, &shape);
        assert_eq!(w.get(&0), Some(&1.0));
        // two eigenvalues in the first bin contribute separately
        let w = tuple_weights(&[-4.6, -4.2, 3.5], &bins, &shape);
        assert_eq!(w.get(&0), Some(&0.0));
        assert!(tuple_weights(&[3.5], &bins, &shape).is_empty());
    }

    #[test]
    fn central_bins_track_kernel() {
        let bins = vec![vec![-0.6, -0.2], vec![0.2, 0.6]];
        let d = estimate_rho_tilde(40, &bins, 4000, 7).unwrap();
        let rule = Composite::new(0.0, 1.0, 1, 10);
        let target = rule.integrate(|u| {
            rule.integrate(|v| modified_density(&[-0.6 + 0.4 * u, 0.2 + 0.4 * v]).unwrap())
        });
        let e = d.cell(&[0, 0]);
        assert!(e.within(target, 3.0), "{e:?} vs {target}");
    }
}
