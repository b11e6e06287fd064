//! Compensated summation and certified tails of smooth series.

use crate::error::Result;
use crate::specfn::{ln_gamma, upper_incomplete_gamma_reg};

/// Neumaier compensated accumulator.
///
/// Keeps the running sum of absolute values so callers can bound the
/// floating-point error of the total.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
    abs: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Sum of the absolute values of everything added so far.
    #[inline]
    pub fn abs_sum(&self) -> f64 {
        self.abs
    }

    /// Rounding allowance for the accumulated total, assuming each term was
    /// evaluated with relative error at most `term_rel_err`.
    pub fn error_allowance(&self, term_rel_err: f64) -> f64 {
        (4.0 * f64::EPSILON + term_rel_err) * self.abs
    }
}

impl std::iter::FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Euler–Maclaurin tail `Σ_{n>N} f(n)` of a decreasing convex `f`.
///
/// With the sawtooth `P₁(x) = [x] − x + 1/2`,
/// `Σ_{n>N} f(n) = ∫_N^∞ f − f(N)/2 + R` and, when `f'` is nondecreasing on
/// `[N, ∞)`, `0 ≤ R ≤ |f'(N)|/8`. Returns the midpoint estimate and its
/// half-width.
pub fn convex_tail(integral: f64, f_at_n: f64, df_at_n: f64) -> (f64, f64) {
    let half = df_at_n.abs() / 16.0;
    (integral - 0.5 * f_at_n + half, half)
}

/// `∫_N^∞ (ln x)^δ x^{−1−p} dx = Γ(δ+1) p^{−δ−1} Q(δ+1, p ln N)` for `p > 0`.
///
/// Bounds `Σ_{n>N} (ln n)^δ n^{−1−p}` from above once the summand is
/// decreasing, i.e. for `ln N ≥ δ/(1+p)`.
pub fn log_power_tail_integral(delta: f64, p: f64, n: f64) -> Result<f64> {
    let s = delta + 1.0;
    let q = upper_incomplete_gamma_reg(s, p * n.ln())?;
    Ok((ln_gamma(s) - s * p.ln()).exp() * q)
}
