//! The limit constants `γ_δ` and `η_δ`, each with a certified error bound.

use std::f64::consts::SQRT_2;

pub use crate::certified::{BoundKind, CertifiedValue};
use crate::dist::{zero_return_probabilities, AbsCharEnvelope, LatticeDistribution, Law, LocalLimitBound};
use crate::error::{Error, Result};
use crate::specfn::{pow_delta, LogConvention};
use crate::summation::{convex_tail, log_power_tail_integral, Neumaier};

/// Largest truncation point `gamma_delta` will sum to.
pub const GAMMA_MAX_TERMS: u64 = 1 << 30;
/// Largest head length `eta_delta` will compute exactly.
pub const ETA_MAX_TERMS: u64 = 1 << 22;

/// Per-term absolute accuracy of the batch return probabilities.
const RETURN_PROB_ACCURACY: f64 = 1e-13;

fn check_delta(delta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("delta must lie in [0, 1], got {delta}")))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tolerance must be positive, got {tol}")))
    }
}

/// Partial sum with compensated accumulation, returning the value and its
/// rounding allowance.
fn gamma_n_parts(n: u64, delta: f64, conv: LogConvention) -> (f64, f64) {
    let mut acc = Neumaier::new();
    for j in 1..=n {
        acc.add(conv.weight(j, delta));
    }
    let l = conv.log(n as f64);
    let integral = pow_delta(l, delta) * l / (delta + 1.0);
    let value = acc.value() - integral;
    let allowance = acc.error_allowance(4.0 * f64::EPSILON) + 4.0 * f64::EPSILON * integral;
    (value, allowance)
}

/// `γ_{n,δ} = Σ_{j≤n} (log j)^δ/j − (log n)^{δ+1}/(δ+1)` with `log n = ln(max(n, e))`.
pub fn gamma_n_delta(n: u64, delta: f64) -> Result<f64> {
    gamma_n_delta_with(n, delta, LogConvention::Paper)
}

pub fn gamma_n_delta_with(n: u64, delta: f64, conv: LogConvention) -> Result<f64> {
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::Domain("gamma_n_delta requires n >= 1".into()));
    }
    Ok(gamma_n_parts(n, delta, conv).0)
}

/// `(g(x), g'(x))` for `g(x) = (ln x)^δ/x`.
fn g_and_derivative(x: f64, delta: f64) -> (f64, f64) {
    let l = x.ln();
    let g = pow_delta(l, delta) / x;
    let dg = if delta == 0.0 { -1.0 / (x * x) } else { l.powf(delta - 1.0) * (delta - l) / (x * x) };
    (g, dg)
}

/// The coarse remainder bound `(3/2)∫_N^∞ |g'| = (3/2)·g(N)`, valid for `N > e^δ`.
pub fn gamma_remainder_crude_bound(delta: f64, n: u64) -> f64 {
    1.5 * g_and_derivative(n as f64, delta).0
}

/// `γ_δ = lim γ_{n,δ}` with `log n = ln(max(n, e))`.
pub fn gamma_delta(delta: f64, tol: f64) -> Result<CertifiedValue> {
    gamma_delta_with(delta, tol, LogConvention::Paper)
}

/// `γ_δ` to absolute accuracy `tol`.
///
/// With `g(x) = (ln x)^δ/x`, Euler–Maclaurin with the sawtooth `P₁` gives
/// `γ_δ = γ_{N,δ} − g(N)/2 + R` and, because `g` is convex once
/// `ln x ≥ 3/2`, `0 ≤ R ≤ |g'(N)|/8`. The midpoint of that range is returned.
pub fn gamma_delta_with(delta: f64, tol: f64, conv: LogConvention) -> Result<CertifiedValue> {
    check_delta(delta)?;
    check_tol(tol)?;
    let half_width = |n: u64| g_and_derivative(n as f64, delta).1.abs() / 16.0;
    let mut n: u64 = 64;
    while half_width(n) > tol / 2.0 && n < GAMMA_MAX_TERMS {
        n *= 2;
    }
    let em = half_width(n);
    if em > tol / 2.0 {
        return Err(Error::UnachievableTolerance { requested: tol, best: em, terms: n });
    }
    let (partial, rounding) = gamma_n_parts(n, delta, conv);
    let (g, dg) = g_and_derivative(n as f64, delta);
    let value = partial - 0.5 * g + dg.abs() / 16.0;
    let bound = em + rounding + 2.0 * f64::EPSILON * value.abs();
    if bound > tol {
        return Err(Error::UnachievableTolerance { requested: tol, best: bound, terms: n });
    }
    Ok(CertifiedValue::rigorous(value, bound, n))
}

/// `η_δ = Σ_{n≥1} (log n)^δ/n · P(S_n = 0)` with `log n = ln(max(n, e))`.
pub fn eta_delta(dist: &LatticeDistribution, delta: f64, tol: f64) -> Result<CertifiedValue> {
    eta_delta_with(dist, delta, tol, LogConvention::Paper)
}

/// `η_δ` for either kind of law; a normal law never returns to zero.
pub fn eta_delta_law(law: &Law, delta: f64, tol: f64, conv: LogConvention) -> Result<CertifiedValue> {
    match law {
        Law::Lattice(d) => eta_delta_with(d, delta, tol, conv),
        Law::Normal { .. } => {
            check_delta(delta)?;
            check_tol(tol)?;
            Ok(CertifiedValue::exact(0.0))
        }
    }
}

/// Bound on `Σ_{n>N, m|n} w(n)·|P(S_n = 0) − ℓ(n)|` for one choice of `t₀`.
fn remainder_tail(b: &LocalLimitBound, delta: f64, n: u64) -> Result<f64> {
    let m = b.period() as f64;
    let mut total = 0.0;
    for (c, p) in b.power_terms(n) {
        total += c * log_power_tail_integral(delta, p, n as f64)? / m;
    }
    let (cr, r, cg, g) = b.geometric_terms();
    let n1 = (n + 1) as f64;
    let w = pow_delta(n1.ln(), delta) / n1;
    total += w * (cr * r.powf(n1) / (1.0 - r) + cg / n1 * g.powf(n1) / (1.0 - g));
    Ok(total)
}

/// `Σ_{k>K} c·(ln mk)^δ·(mk)^{−3/2}` by the convex Euler–Maclaurin tail, `N = mK`.
fn leading_tail(b: &LocalLimitBound, delta: f64, n: u64) -> Result<(f64, f64)> {
    let c = b.leading_coefficient();
    let m = b.period() as f64;
    let nf = n as f64;
    let l = nf.ln();
    let integral = c / m * log_power_tail_integral(delta, 0.5, nf)?;
    let f = c * pow_delta(l, delta) * nf.powf(-1.5);
    let dl = if delta == 0.0 { 0.0 } else { delta * l.powf(delta - 1.0) };
    let df = c * m * nf.powf(-2.5) * (dl - 1.5 * pow_delta(l, delta));
    Ok(convex_tail(integral, f, df))
}

/// `η_δ` to absolute accuracy `tol`.
///
/// The head `n ≤ N` uses exact return probabilities. Past `N` each term is
/// replaced by its local-limit leading part `d/(σ√(2πn))`, summed in closed
/// form, and the difference is bounded by an explicit `O(n^{−3/2})` estimate
/// from the characteristic function (see `LocalLimitBound`). `N` doubles
/// until that estimate fits in half the tolerance.
pub fn eta_delta_with(
    dist: &LatticeDistribution,
    delta: f64,
    tol: f64,
    conv: LogConvention,
) -> Result<CertifiedValue> {
    check_delta(delta)?;
    check_tol(tol)?;
    dist.require_centered()?;
    let env = AbsCharEnvelope::new(dist);
    let sigma = dist.variance().sqrt() / dist.scale();
    let t_hi = env.t_end().min(SQRT_2 / sigma);
    let candidates: Vec<LocalLimitBound> = [0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.97]
        .iter()
        .filter_map(|f| LocalLimitBound::new(dist, &env, f * t_hi))
        .collect();
    if candidates.is_empty() {
        return Err(Error::Convergence("no valid Gaussian envelope for the characteristic function".into()));
    }
    let period = dist.return_period();
    let mut n = 4096u64.div_ceil(period) * period;
    let (bound, best) = loop {
        let mut best: Option<(f64, &LocalLimitBound)> = None;
        for b in &candidates {
            let e = remainder_tail(b, delta, n)? + leading_tail(b, delta, n)?.1;
            if best.is_none_or(|(v, _)| e < v) {
                best = Some((e, b));
            }
        }
        let (e, b) = best.expect("candidates is nonempty");
        if e <= tol / 2.0 {
            break (e, b);
        }
        if 2 * n > ETA_MAX_TERMS {
            return Err(Error::UnachievableTolerance { requested: tol, best: e, terms: n });
        }
        n *= 2;
    };

    let probs = zero_return_probabilities(dist, n)?;
    let mut head = Neumaier::new();
    let mut weight_mass = 0.0;
    for k in (period..=n).step_by(period as usize) {
        let w = conv.weight(k, delta);
        head.add(w * probs[k as usize]);
        weight_mass += w;
    }
    let (tail, _) = leading_tail(best, delta, n)?;
    let value = head.value() + tail;
    let rounding = head.error_allowance(4.0 * f64::EPSILON) + RETURN_PROB_ACCURACY * weight_mass;
    let error = bound + rounding;
    if error > tol {
        return Err(Error::UnachievableTolerance { requested: tol, best: error, terms: n });
    }
    Ok(CertifiedValue::rigorous(value, error, n))
}
