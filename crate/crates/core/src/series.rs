//! Certified evaluation of the weighted tail series.
//!
//! * `normal_series`: `Σ (log n)^δ/n · P(|N| ≥ ε√(log n))`
//! * `difference_series`: the lattice correction
//!   `Σ (log n)^δ/n · [P(|S_n/σ| ≥ ε√(n log n)) − P(|N| ≥ ε√(log n))]`
//! * `davis_series`: `Σ (log n)^δ/n · P(|S_n| ≥ ε√(n log n))`
//! * `heyde_klesov_series`: `Σ P(|S_n| ≥ εn)`

use serde::{Deserialize, Serialize};

use crate::certified::CertifiedValue;
use crate::dist::{two_point_tail, min_offset_reaching, BerryEsseenEnvelope, LatticeDistribution, Law, SumWalk, DEFAULT_CONVOLUTION_CEILING};
use crate::error::{Error, Result};
use crate::specfn::{
    abs_normal_moment, chi2_1_density, normal_tail_unchecked, pow_delta, upper_incomplete_gamma_reg, LogConvention,
};
use crate::summation::{convex_tail, log_power_tail_integral, Neumaier};

/// How the part of a series beyond the summed head is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    /// Integral plus the first Euler–Maclaurin correction, with a remainder bound.
    #[default]
    IntegralEm,
    /// Only use `0 ≤ tail ≤ ∫`; report the midpoint.
    BoundOnly,
}

impl std::str::FromStr for TailMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integral_em" | "integral-em" | "em" => Ok(TailMethod::IntegralEm),
            "bound_only" | "bound-only" => Ok(TailMethod::BoundOnly),
            other => Err(Error::Input(format!("unknown tail method '{other}'"))),
        }
    }
}

/// Head/tail split for the series evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPlan {
    /// Terms summed with exact lattice probabilities.
    pub n_exact: u64,
    /// Terms of the normal series summed one by one.
    pub n_normal: u64,
    pub tail_method: TailMethod,
    pub log_convention: LogConvention,
}

impl Default for EvalPlan {
    fn default() -> Self {
        Self::for_delta(0.0)
    }
}

impl EvalPlan {
    /// Default split: exact head to 10⁴ (3·10⁴ for δ near 1), normal head to 10⁶.
    pub fn for_delta(delta: f64) -> Self {
        Self {
            n_exact: if delta >= 0.75 { 30_000 } else { 10_000 },
            n_normal: 1_000_000,
            tail_method: TailMethod::IntegralEm,
            log_convention: LogConvention::Paper,
        }
    }

    pub fn with_convention(self, log_convention: LogConvention) -> Self {
        Self { log_convention, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_exact == 0 || self.n_exact > self.n_normal {
            return Err(Error::Input(format!(
                "plan needs 1 <= n_exact <= n_normal, got {} and {}",
                self.n_exact, self.n_normal
            )));
        }
        // The tail integrands are convex only once ln x ≥ 2.
        if self.n_normal < 8 {
            return Err(Error::Input(format!("plan needs n_normal >= 8, got {}", self.n_normal)));
        }
        Ok(())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergent(format!("the series diverges unless eps > 0 (got {eps})")))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("delta must lie in [0, 1], got {delta}")))
    }
}

/// `ε√(log n)` argument of the normal term.
#[inline]
fn normal_term(n: u64, eps: f64, delta: f64, conv: LogConvention) -> (f64, f64) {
    let w = conv.weight(n, delta);
    let l = conv.log(n as f64);
    (w, normal_tail_unchecked(eps * l.sqrt()))
}

/// `∫_U^∞ u^δ P(|N| ≥ ε√u) du`.
///
/// With `V = N²/ε²` this is `E[(V^{δ+1} − U^{δ+1})⁺]/(δ+1)`, i.e.
/// `[ε^{−2δ−2}E|N|^{2δ+2}Q(δ+3/2, ε²U/2) − U^{δ+1}Q(1/2, ε²U/2)]/(δ+1)`.
pub fn normal_tail_integral(eps: f64, delta: f64, u: f64) -> Result<f64> {
    check_eps(eps)?;
    check_delta(delta)?;
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("lower limit must be >= 0, got {u}")));
    }
    let s = delta + 1.0;
    let y = eps * eps * u / 2.0;
    let moment = abs_normal_moment(2.0 * s)? * eps.powf(-2.0 * s);
    let a = moment * upper_incomplete_gamma_reg(s + 0.5, y)?;
    let b = if u == 0.0 { 0.0 } else { u.powf(s) * upper_incomplete_gamma_reg(0.5, y)? };
    Ok(((a - b) / s).max(0.0))
}

/// Certified tail `Σ_{n>N} (ln n)^δ/n · P(|N| ≥ ε√(ln n))` for `ln N ≥ 2`.
///
/// `f(x) = h(ln x)/x` with `h(u) = u^δ T(ε√u)` is convex there, so the
/// Euler–Maclaurin remainder is bounded by `|f'(N)|/8`.
fn normal_series_tail(eps: f64, delta: f64, n: u64, method: TailMethod) -> Result<(f64, f64)> {
    let x = n as f64;
    let u = x.ln();
    let integral = normal_tail_integral(eps, delta, u)?;
    match method {
        TailMethod::BoundOnly => Ok((integral / 2.0, integral / 2.0)),
        TailMethod::IntegralEm => {
            let t = normal_tail_unchecked(eps * u.sqrt());
            let h = pow_delta(u, delta) * t;
            let dpow = if delta == 0.0 { 0.0 } else { delta * u.powf(delta - 1.0) };
            let dh = dpow * t - pow_delta(u, delta) * eps * eps * chi2_1_density(eps * eps * u);
            let f = h / x;
            let df = (dh - h) / (x * x);
            let (v, half) = convex_tail(integral, f, df);
            Ok((v.max(0.0), half))
        }
    }
}

/// Partial sum `Σ_{n≤N}` of the normal series.
pub fn normal_series_head(eps: f64, delta: f64, n_max: u64, conv: LogConvention) -> Result<f64> {
    check_eps(eps)?;
    check_delta(delta)?;
    Ok(normal_head_range(eps, delta, 1, n_max, conv).value())
}

fn normal_head_range(eps: f64, delta: f64, from: u64, to: u64, conv: LogConvention) -> Neumaier {
    let mut acc = Neumaier::new();
    for n in from..=to {
        let (w, t) = normal_term(n, eps, delta, conv);
        acc.add(w * t);
    }
    acc
}

/// `Σ_{n≥1} (log n)^δ/n · P(|N| ≥ ε√(log n))` with a rigorous bound.
pub fn normal_series(eps: f64, delta: f64, plan: &EvalPlan) -> Result<CertifiedValue> {
    check_eps(eps)?;
    check_delta(delta)?;
    plan.validate()?;
    let head = normal_head_range(eps, delta, 1, plan.n_normal, plan.log_convention);
    let (tail, half) = normal_series_tail(eps, delta, plan.n_normal, plan.tail_method)?;
    let value = head.value() + tail;
    let bound = half + head.error_allowance(1e-14) + 2.0 * f64::EPSILON * value;
    Ok(CertifiedValue::rigorous(value, bound, plan.n_normal))
}

/// Exact `P(|S_n| ≥ t_n)` for `n = 1, 2, …` in order.
enum ExactTails {
    TwoPoint { lo: i64, hi: i64, p_lo: f64, scale: f64 },
    Walk(Box<SumWalk>),
}

impl ExactTails {
    fn new(dist: &LatticeDistribution) -> Self {
        match dist.two_point() {
            Some(tp) => ExactTails::TwoPoint { lo: tp.lo, hi: tp.hi, p_lo: tp.p_lo, scale: dist.scale() },
            None => ExactTails::Walk(Box::new(SumWalk::new(dist))),
        }
    }

    /// Must be called with `n = 1, 2, …` consecutively.
    fn next(&mut self, n: u64, t: f64) -> Result<f64> {
        match self {
            ExactTails::TwoPoint { lo, hi, p_lo, scale } => {
                two_point_tail(*lo, *hi, *p_lo, n, min_offset_reaching(t, *scale))
            }
            ExactTails::Walk(w) => {
                if n > DEFAULT_CONVOLUTION_CEILING {
                    return Err(Error::Resource(format!(
                        "exact head to n = {n} exceeds the convolution ceiling {DEFAULT_CONVOLUTION_CEILING}"
                    )));
                }
                let s = w.advance();
                debug_assert_eq!(s.n, n);
                Ok(if t == 0.0 { 1.0 } else { s.tail_abs_ge(t) })
            }
        }
    }
}

/// Threshold `ε√(n log n)` (physical units).
#[inline]
fn davis_threshold(n: u64, eps: f64, conv: LogConvention) -> f64 {
    let x = n as f64;
    eps * (x * conv.log(x)).sqrt()
}

/// Head sums of the three Davis-type series, computed together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DavisHeads {
    pub davis: f64,
    pub normal: f64,
    pub difference: f64,
}

/// `Σ_{n≤N}` of the Davis, normal, and difference series for a lattice law.
/// The normal part uses `ε/σ`.
pub fn davis_heads(
    dist: &LatticeDistribution,
    eps: f64,
    delta: f64,
    n_max: u64,
    conv: LogConvention,
) -> Result<DavisHeads> {
    check_eps(eps)?;
    check_delta(delta)?;
    let std_eps = eps / dist.std_dev();
    let mut tails = ExactTails::new(dist);
    let (mut d, mut nrm, mut diff) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
    for n in 1..=n_max {
        let p = tails.next(n, davis_threshold(n, eps, conv))?;
        let (w, t) = normal_term(n, std_eps, delta, conv);
        d.add(w * p);
        nrm.add(w * t);
        diff.add(w * (p - t));
    }
    Ok(DavisHeads { davis: d.value(), normal: nrm.value(), difference: diff.value() })
}

/// `Σ_{n≤N} w(n)·P(|S_n| ≥ t_n)` and `Σ_{n≤N} w(n)·P(|N| ≥ ε√(log n))`.
struct LatticeHead {
    exact: Neumaier,
    normal: Neumaier,
}

fn lattice_head(dist: &LatticeDistribution, eps: f64, delta: f64, n_max: u64, conv: LogConvention) -> Result<LatticeHead> {
    let std_eps = eps / dist.std_dev();
    let mut tails = ExactTails::new(dist);
    let mut head = LatticeHead { exact: Neumaier::new(), normal: Neumaier::new() };
    for n in 1..=n_max {
        let p = tails.next(n, davis_threshold(n, eps, conv))?;
        let (w, t) = normal_term(n, std_eps, delta, conv);
        head.exact.add(w * p);
        head.normal.add(w * t);
    }
    Ok(head)
}

/// Relative accuracy assumed for exact lattice tail probabilities.
const EXACT_TAIL_ACCURACY: f64 = 1e-12;

/// Bound on `Σ_{n>N} (log n)^δ/n · |P(|S_n/σ| ≥ ε√(n log n)) − P(|N| ≥ ε√(log n))|`.
///
/// Two estimates, the smaller is used:
/// * the Berry–Esseen envelope `c/√n`, summed as `c·∫_N^∞ (ln x)^δ x^{−3/2}`;
/// * Hoeffding for the lattice term, `2n^{−2ε²σ²/R²}` with `R` the range of
///   `X`, plus the Chernoff bound `n^{−ε²/2}` for the normal term.
fn difference_tail_bound(dist: &LatticeDistribution, eps: f64, delta: f64, n: u64, env: &BerryEsseenEnvelope) -> Result<f64> {
    let nf = n as f64;
    let be = env.constant() * log_power_tail_integral(delta, 0.5, nf)?;
    let range = (dist.max_offset() - dist.min_offset()) as f64 * dist.scale();
    let p1 = 2.0 * eps * eps / (range * range);
    let p2 = eps * eps / (2.0 * dist.variance());
    let hoeffding = 2.0 * log_power_tail_integral(delta, p1, nf)? + log_power_tail_integral(delta, p2, nf)?;
    Ok(be.min(hoeffding))
}

/// Lattice correction series; `ε` is in standard-deviation units.
pub fn difference_series(dist: &LatticeDistribution, eps: f64, delta: f64, plan: &EvalPlan) -> Result<CertifiedValue> {
    difference_series_with(dist, eps, delta, plan, None)
}

pub fn difference_series_with(
    dist: &LatticeDistribution,
    eps: f64,
    delta: f64,
    plan: &EvalPlan,
    envelope: Option<&BerryEsseenEnvelope>,
) -> Result<CertifiedValue> {
    check_eps(eps)?;
    check_delta(delta)?;
    plan.validate()?;
    dist.require_centered()?;
    let env = match envelope {
        Some(e) => *e,
        None => default_envelope(dist)?,
    };
    let sigma = dist.std_dev();
    let head = lattice_head(dist, eps * sigma, delta, plan.n_exact, plan.log_convention)?;
    let value = head.exact.value() - head.normal.value();
    let tail = difference_tail_bound(dist, eps * sigma, delta, plan.n_exact, &env)?;
    let bound = tail + EXACT_TAIL_ACCURACY * (head.exact.abs_sum() + head.normal.abs_sum());
    Ok(CertifiedValue::rigorous(value, bound, plan.n_exact))
}

pub fn default_envelope(dist: &LatticeDistribution) -> Result<BerryEsseenEnvelope> {
    BerryEsseenEnvelope::fit(dist, BerryEsseenEnvelope::DEFAULT_N_FIT, BerryEsseenEnvelope::DEFAULT_SAFETY)
}

/// `Σ_{n≥1} (log n)^δ/n · P(|S_n| ≥ ε√(n log n))`.
///
/// For a lattice law this is the exact head to `n_exact`, the normal terms
/// (at `ε/σ`) from there to `n_normal`, the normal tail beyond, and the
/// difference-tail bound in the error. Summing the pieces directly, instead
/// of subtracting two large series, keeps tiny values accurate.
pub fn davis_series(law: &Law, eps: f64, delta: f64, plan: &EvalPlan) -> Result<CertifiedValue> {
    davis_series_with(law, eps, delta, plan, None)
}

pub fn davis_series_with(
    law: &Law,
    eps: f64,
    delta: f64,
    plan: &EvalPlan,
    envelope: Option<&BerryEsseenEnvelope>,
) -> Result<CertifiedValue> {
    check_eps(eps)?;
    check_delta(delta)?;
    plan.validate()?;
    let dist = match law {
        Law::Normal { sigma } => return normal_series(eps / sigma, delta, plan),
        Law::Lattice(d) => d,
    };
    dist.require_centered()?;
    let env = match envelope {
        Some(e) => *e,
        None => default_envelope(dist)?,
    };
    let std_eps = eps / dist.std_dev();
    let conv = plan.log_convention;
    let head = lattice_head(dist, eps, delta, plan.n_exact, conv)?;
    let middle = normal_head_range(std_eps, delta, plan.n_exact + 1, plan.n_normal, conv);
    let (tail, half) = normal_series_tail(std_eps, delta, plan.n_normal, plan.tail_method)?;
    let diff_tail = difference_tail_bound(dist, eps, delta, plan.n_exact, &env)?;
    let value = head.exact.value() + middle.value() + tail;
    let bound = diff_tail
        + half
        + EXACT_TAIL_ACCURACY * head.exact.abs_sum()
        + middle.error_allowance(1e-14)
        + 2.0 * f64::EPSILON * value;
    Ok(CertifiedValue::rigorous(value, bound, plan.n_normal))
}

/// `∫_N^∞ P(|N| ≥ c√x) dx = Q(3/2, c²N/2)/c² − N·Q(1/2, c²N/2)`.
fn klesov_tail_integral(c: f64, n: f64) -> Result<f64> {
    let y = c * c * n / 2.0;
    let v = upper_incomplete_gamma_reg(1.5, y)? / (c * c) - n * upper_incomplete_gamma_reg(0.5, y)?;
    Ok(v.max(0.0))
}

/// Stop extending an exact head once the remaining Hoeffding mass is below this.
const HEYDE_NEGLIGIBLE: f64 = 1e-16;

/// `Σ_{n≥1} P(|S_n| ≥ εn)`.
pub fn heyde_klesov_series(law: &Law, eps: f64, plan: &EvalPlan) -> Result<CertifiedValue> {
    check_eps(eps)?;
    plan.validate()?;
    match law {
        Law::Normal { sigma } => {
            let c = eps / sigma;
            let n = plan.n_normal;
            let mut head = Neumaier::new();
            for k in 1..=n {
                head.add(normal_tail_unchecked(c * (k as f64).sqrt()));
            }
            let nf = n as f64;
            let integral = klesov_tail_integral(c, nf)?;
            let (tail, half) = match plan.tail_method {
                TailMethod::BoundOnly => (integral / 2.0, integral / 2.0),
                TailMethod::IntegralEm => {
                    // f(x) = T(c√x) is decreasing and convex; f'(x) = −c²·q(c²x).
                    let f = normal_tail_unchecked(c * nf.sqrt());
                    let df = -c * c * chi2_1_density(c * c * nf);
                    convex_tail(integral, f, df)
                }
            };
            let value = head.value() + tail;
            let bound = half + head.error_allowance(1e-14) + 2.0 * f64::EPSILON * value;
            Ok(CertifiedValue::rigorous(value, bound, n))
        }
        Law::Lattice(dist) => heyde_lattice(dist, eps, plan),
    }
}

/// `Σ_{n>N} 2e^{−2ε²n/R²}` (Hoeffding) and `Σ_{n>N} e^{−ε²n/(2σ²)}` (Chernoff).
fn heyde_tail_masses(eps: f64, range: f64, var: f64, n: u64) -> (f64, f64) {
    let geometric = |rate: f64| (-(rate * (n + 1) as f64)).exp() / -(-rate).exp_m1();
    (2.0 * geometric(2.0 * eps * eps / (range * range)), geometric(eps * eps / (2.0 * var)))
}

fn heyde_lattice(dist: &LatticeDistribution, eps: f64, plan: &EvalPlan) -> Result<CertifiedValue> {
    dist.require_centered()?;
    let range = (dist.max_offset() - dist.min_offset()) as f64 * dist.scale();
    let var = dist.variance();
    let c = eps / var.sqrt();
    let mut tails = ExactTails::new(dist);
    let two_point = dist.two_point().is_some();
    let mut exact = Neumaier::new();
    let mut mass = 0.0;
    let mut n = 0u64;
    // Two-point laws have closed-form tails for every n, so the exact head runs
    // until the Hoeffding remainder is negligible.
    let limit = if two_point { plan.n_normal.max(plan.n_exact) } else { plan.n_exact };
    while n < limit {
        n += 1;
        let p = tails.next(n, eps * n as f64)?;
        exact.add(p);
        mass += p;
        if two_point && n >= plan.n_exact && heyde_tail_masses(eps, range, var, n).0 < HEYDE_NEGLIGIBLE {
            break;
        }
    }
    let (hoeffding, chernoff) = heyde_tail_masses(eps, range, var, n);
    let mut value = exact.value();
    let mut bound = EXACT_TAIL_ACCURACY * mass;
    let mut terms = n;
    if hoeffding >= HEYDE_NEGLIGIBLE || !two_point {
        // Beyond the exact head, use the normal terms and bound the difference.
        let middle_end = plan.n_normal.max(n);
        let mut middle = Neumaier::new();
        for k in n + 1..=middle_end {
            middle.add(normal_tail_unchecked(c * (k as f64).sqrt()));
        }
        let nf = middle_end as f64;
        let integral = klesov_tail_integral(c, nf)?;
        let f = normal_tail_unchecked(c * nf.sqrt());
        let df = -c * c * chi2_1_density(c * c * nf);
        let (tail, half) = convex_tail(integral, f, df);
        value += middle.value() + tail;
        bound += half + middle.error_allowance(1e-14) + hoeffding + chernoff;
        terms = middle_end;
    } else {
        bound += hoeffding;
    }
    bound += 2.0 * f64::EPSILON * value;
    Ok(CertifiedValue::rigorous(value, bound, terms))
}
