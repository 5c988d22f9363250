//! Real Schur eigenvalues via Householder Hessenberg reduction followed by
//! Francis double-shift QR.
//!
//! Only the quasi-triangular structure is needed: every deflated 1×1 block
//! is a real eigenvalue, every deflated 2×2 block is standardized and either
//! split into two real eigenvalues or kept as a conjugate pair. No threshold
//! on imaginary parts is ever applied.

use serde::{Deserialize, Serialize};

use super::{LinalgError, RealSquareMatrix};

/// Eigenvalues of a real matrix split into the real ones and conjugate pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Sorted ascending.
    pub real_eigenvalues: Vec<f64>,
    /// `(a, b)` stands for `a ± ib`; always `b > 0`.
    pub complex_pairs: Vec<(f64, f64)>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.real_eigenvalues.len() + 2 * self.complex_pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of all eigenvalues (equals the trace).
    pub fn sum(&self) -> f64 {
        self.real_eigenvalues.iter().sum::<f64>()
            + self.complex_pairs.iter().map(|(a, _)| 2.0 * a).sum::<f64>()
    }

    /// Product of the Schur block determinants.
    pub fn determinant(&self) -> f64 {
        self.real_eigenvalues.iter().product::<f64>()
            * self.complex_pairs.iter().map(|(a, b)| a * a + b * b).product::<f64>()
    }

    /// Number of real eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        self.real_eigenvalues.partition_point(|&l| l < x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SchurOptions {
    /// Total QR sweep budget; `None` means `30 * n`.
    pub max_sweeps: Option<usize>,
    pub balance: bool,
}

impl Default for SchurOptions {
    fn default() -> Self {
        Self { max_sweeps: None, balance: true }
    }
}

pub fn real_schur(m: &RealSquareMatrix) -> Result<Spectrum, LinalgError> {
    real_schur_with(m, SchurOptions::default())
}

pub fn real_schur_with(m: &RealSquareMatrix, opts: SchurOptions) -> Result<Spectrum, LinalgError> {
    let n = m.dim();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let mut a: Vec<f64> = m.as_slice().to_vec();
    if opts.balance {
        balance(&mut a, n);
    }
    hessenberg(&mut a, n);
    let budget = opts.max_sweeps.unwrap_or(30 * n);
    let (mut reals, mut pairs) = hqr(&mut a, n, budget)?;
    reals.sort_by(|x, y| x.total_cmp(y));
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    Ok(Spectrum { real_eigenvalues: reals, complex_pairs: pairs })
}

/// Diagonal similarity scaling by powers of two (Parlett–Reinsch).
fn balance(a: &mut [f64], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j * n + i].abs();
                    r += a[i * n + j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[i * n + j] *= g;
                    }
                    for j in 0..n {
                        a[j * n + i] *= f;
                    }
                }
            }
        }
    }
}

/// In-place orthogonal reduction to upper Hessenberg form.
fn hessenberg(a: &mut [f64], n: usize) {
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let alpha_norm: f64 = (k + 1..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let alpha = if x0 >= 0.0 { -alpha_norm } else { alpha_norm };
        for i in k + 1..n {
            v[i] = a[i * n + k];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A <- (I - 2vv'/v'v) A
        for j in 0..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * a[i * n + j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k + 1..n {
                a[i * n + j] -= f * v[i];
            }
        }
        // A <- A (I - 2vv'/v'v)
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| a[i * n + j] * v[j]).sum();
            let f = 2.0 * dot / vnorm2;
            for j in k + 1..n {
                a[i * n + j] -= f * v[j];
            }
        }
        for i in k + 2..n {
            a[i * n + k] = 0.0;
        }
    }
}

#[inline]
fn sign_of(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
#[allow(clippy::type_complexity)]
fn hqr(a: &mut [f64], n: usize, budget: usize) -> Result<(Vec<f64>, Vec<(f64, f64)>), LinalgError> {
    let idx = |i: usize, j: usize| i * n + j;
    let mut reals = Vec::with_capacity(n);
    let mut pairs = Vec::new();

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[idx(i, j)].abs();
        }
    }

    let mut sweeps = 0usize;
    let mut nn = n as isize - 1;
    let mut shift = 0.0;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let nu = nn as usize;
            // Locate a negligible subdiagonal entry.
            let mut l = nu;
            while l >= 1 {
                let mut s = a[idx(l - 1, l - 1)].abs() + a[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[idx(l, l - 1)].abs() + s == s {
                    a[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[idx(nu, nu)];
            if l == nu {
                reals.push(x + shift);
                nn -= 1;
                break;
            }
            let mut y = a[idx(nu - 1, nu - 1)];
            let mut w = a[idx(nu, nu - 1)] * a[idx(nu - 1, nu)];
            if l == nu - 1 {
                // Standardize the trailing 2×2 block.
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift;
                if q >= 0.0 {
                    let z = p + sign_of(z, p);
                    let r1 = x + z;
                    let r2 = if z != 0.0 { x - w / z } else { r1 };
                    reals.push(r1);
                    reals.push(r2);
                } else {
                    pairs.push((x + p, z));
                }
                nn -= 2;
                break;
            }
            if sweeps >= budget {
                return Err(LinalgError::NoConvergence { sweeps });
            }
            if its > 0 && its.is_multiple_of(10) {
                // Exceptional shift after stagnation.
                shift += x;
                for i in 0..=nu {
                    a[idx(i, i)] -= x;
                }
                let s = a[idx(nu, nu - 1)].abs() + a[idx(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            sweeps += 1;

            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[idx(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[idx(m + 1, m)] + a[idx(m, m + 1)];
                q = a[idx(m + 1, m + 1)] - z - rr - ss;
                r = a[idx(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[idx(m - 1, m - 1)].abs() + z.abs() + a[idx(m + 1, m + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                a[idx(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[idx(i, i - 3)] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[idx(k, k - 1)];
                    q = a[idx(k + 1, k - 1)];
                    r = if k != nu - 1 { a[idx(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[idx(k, k - 1)] = -a[idx(k, k - 1)];
                        }
                    } else {
                        a[idx(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[idx(k, j)] + q * a[idx(k + 1, j)];
                        if k != nu - 1 {
                            pp += r * a[idx(k + 2, j)];
                            a[idx(k + 2, j)] -= pp * z;
                        }
                        a[idx(k + 1, j)] -= pp * y;
                        a[idx(k, j)] -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[idx(i, k)] + y * a[idx(i, k + 1)];
                        if k != nu - 1 {
                            pp += z * a[idx(i, k + 2)];
                            a[idx(i, k + 2)] -= pp * r;
                        }
                        a[idx(i, k + 1)] -= pp * q;
                        a[idx(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((reals, pairs))
}
