//! `e^{iθ}` for large phases given as exact-ish rationals `p/t`.
//!
//! A phase of a few hundred radians rounded to `f64` already carries an
//! absolute error near `1e-14`, which is what limits sums of oscillatory
//! terms. Here `p` is carried as an unevaluated double-double, divided by `t`
//! and reduced modulo `2π` before the sine and cosine are taken.

use num_complex::Complex64;

const TWO_PI_HI: f64 = std::f64::consts::TAU;
const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    #[cfg(test)]
    pub fn new(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    fn norm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    /// Exact product of two doubles.
    pub fn prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    /// Exact difference of two doubles.
    pub fn diff(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, -b);
        Self { hi, lo }
    }

    pub fn add(self, o: Dd) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        Self::norm(s, e + self.lo + o.lo)
    }

    pub fn square(self) -> Self {
        let (p, e) = two_prod(self.hi, self.hi);
        Self::norm(p, e + 2.0 * self.hi * self.lo)
    }

    pub fn scale(self, s: f64) -> Self {
        let (p, e) = two_prod(self.hi, s);
        Self::norm(p, e + self.lo * s)
    }

    pub fn div(self, t: f64) -> Self {
        let q1 = self.hi / t;
        // hi − q1·t is exact
        let r = -q1.mul_add(t, -self.hi) + self.lo;
        Self::norm(q1, r / t)
    }

    /// Representative of `self` modulo `2π`, as a plain double in `[−π, π]`.
    pub fn rem_two_pi(self) -> f64 {
        let k = (self.hi / TWO_PI_HI).round();
        let (p, pe) = two_prod(k, TWO_PI_HI);
        let (s, se) = two_sum(self.hi, -p);
        s + (se - pe + self.lo - k * TWO_PI_LO)
    }
}

/// `e^{iθ}` with `θ = p/t`.
pub(crate) fn cis_over(p: Dd, t: f64) -> Complex64 {
    let r = p.div(t).rem_two_pi();
    Complex64::new(r.cos(), r.sin())
}
