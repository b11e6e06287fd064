//! ε-sweeps that compare finite-ε remainders against their limiting constants.
//!
//! Each [`SweepMode`] pairs a series-side quantity, evaluated on a decreasing
//! grid of ε, with a target computed only from [`crate::constants`] and
//! [`crate::specfn`]. The sweep extrapolates the series side to ε → 0 and
//! records a pass/fail verdict.

use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certified::CertifiedValue;
use crate::constants::{eta_delta_law, gamma_delta_with};
use crate::dist::{BerryEsseenEnvelope, Law};
use crate::error::{Error, Result};
use crate::series::{
    davis_series_with, default_envelope, difference_series_with, heyde_klesov_series, normal_series, EvalPlan,
};
use crate::specfn::{abs_normal_moment, LogConvention};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TOLERANCE: f64 = 0.02;
pub const DEFAULT_EPS_GRID: [f64; 5] = [0.4, 0.283, 0.2, 0.141, 0.1];
/// Accuracy requested from `γ_δ` when it serves as a target.
pub const GAMMA_TARGET_TOL: f64 = 1e-9;
/// Accuracy requested from `η_δ` when it serves as a target.
pub const ETA_TARGET_TOL: f64 = 1e-7;
/// Exponents tried by [`Extrapolation::PowerFit`].
pub const POWER_FIT_EXPONENTS: [f64; 3] = [0.5, 1.0, 1.5];

/// Which limit a sweep checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Davis series minus its leading term, against `γ_δ − η_δ`.
    #[serde(rename = "theorem11")]
    DavisRemainder,
    /// `ε^{2δ+2}` times the Davis series, against `E|N|^{2δ+2}σ^{2δ+2}/(δ+1)`.
    #[serde(rename = "gs_leading")]
    DavisLeading,
    /// Normal-law `Σ P(|S_n| ≥ εn) − σ²/ε²`, against `−1/2`.
    #[serde(rename = "klesov_normal")]
    KlesovNormal,
    /// `ε²·Σ P(|S_n| ≥ εn)`, against `σ²`.
    #[serde(rename = "heyde_leading")]
    HeydeLeading,
    /// Normal series minus its leading term, against `γ_δ`.
    #[serde(rename = "prop21")]
    NormalRemainder,
    /// Lattice difference series, against `−η_δ`.
    #[serde(rename = "prop31")]
    LatticeDifference,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::DavisRemainder => "theorem11",
            SweepMode::DavisLeading => "gs_leading",
            SweepMode::KlesovNormal => "klesov_normal",
            SweepMode::HeydeLeading => "heyde_leading",
            SweepMode::NormalRemainder => "prop21",
            SweepMode::LatticeDifference => "prop31",
        }
    }

    fn uses_delta(self) -> bool {
        !matches!(self, SweepMode::KlesovNormal | SweepMode::HeydeLeading)
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "theorem11" => SweepMode::DavisRemainder,
            "gs" | "gs_leading" => SweepMode::DavisLeading,
            "klesov" | "klesov_normal" => SweepMode::KlesovNormal,
            "heyde" | "heyde_leading" => SweepMode::HeydeLeading,
            "prop21" => SweepMode::NormalRemainder,
            "prop31" => SweepMode::LatticeDifference,
            other => return Err(Error::Input(format!("unknown sweep mode '{other}'"))),
        })
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Final grid value; uncertainty adds the spread of the last two points.
    LastPoint,
    /// Least squares `L + a·ε^β` for each β in [`POWER_FIT_EXPONENTS`].
    #[default]
    PowerFit,
}

impl FromStr for Extrapolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "last_point" | "last-point" | "last" => Ok(Extrapolation::LastPoint),
            "power_fit" | "power-fit" | "power" => Ok(Extrapolation::PowerFit),
            other => Err(Error::Input(format!("unknown extrapolation '{other}'"))),
        }
    }
}

/// Result of [`extrapolate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub limit: f64,
    pub uncertainty: f64,
    /// Exponent selected by the power fit; `None` for `last_point`.
    pub exponent: Option<f64>,
}

/// Estimates the ε → 0 limit of `(ε, value, uncertainty)` samples.
pub fn extrapolate(points: &[(f64, f64, f64)], method: Extrapolation) -> Result<LimitEstimate> {
    if points.len() < 3 {
        return Err(Error::Input(format!("extrapolation needs at least 3 points, got {}", points.len())));
    }
    check_grid(&points.iter().map(|p| p.0).collect::<Vec<_>>())?;
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Input("extrapolation input contains a non-finite value".into()));
    }
    match method {
        Extrapolation::LastPoint => {
            let [.., (_, prev, _), (_, last, u)] = points else { unreachable!() };
            Ok(LimitEstimate { limit: *last, uncertainty: u + (last - prev).abs(), exponent: None })
        }
        Extrapolation::PowerFit => {
            let mut best: Option<(f64, LimitEstimate)> = None;
            for beta in POWER_FIT_EXPONENTS {
                let (rss, est) = power_fit(points, beta);
                if best.as_ref().is_none_or(|(r, _)| rss < *r) {
                    best = Some((rss, est));
                }
            }
            Ok(best.expect("exponent list is nonempty").1)
        }
    }
}

/// Ordinary least squares of `value` on `ε^β`; returns the residual sum of
/// squares and the intercept with its standard error.
fn power_fit(points: &[(f64, f64, f64)], beta: f64) -> (f64, LimitEstimate) {
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.powf(beta)).collect();
    let x_bar = xs.iter().sum::<f64>() / m;
    let y_bar = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - x_bar) * (p.1 - y_bar)).sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let rss: f64 = xs.iter().zip(points).map(|(x, p)| (p.1 - intercept - slope * x).powi(2)).sum();
    let s2 = rss / (m - 2.0);
    let se = (s2 * (1.0 / m + x_bar * x_bar / sxx)).sqrt();
    (rss, LimitEstimate { limit: intercept, uncertainty: se, exponent: Some(beta) })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::Input(format!("eps grid needs at least 3 points, got {}", grid.len())));
    }
    if grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Input("eps grid values must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Input("eps grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// `E|N|^{2δ+2}·σ^{2δ+2}/((δ+1)·ε^{2δ+2})`.
pub fn davis_leading_term(sigma: f64, delta: f64, eps: f64) -> Result<f64> {
    let p = 2.0 * delta + 2.0;
    Ok(abs_normal_moment(p)? * (sigma / eps).powf(p) / (delta + 1.0))
}

/// Davis series minus its leading term.
pub fn remainder_theorem11(law: &Law, delta: f64, eps: f64, plan: &EvalPlan) -> Result<CertifiedValue> {
    remainder_with(law, delta, eps, plan, None).map(|(_, r)| r)
}

fn remainder_with(
    law: &Law,
    delta: f64,
    eps: f64,
    plan: &EvalPlan,
    env: Option<&BerryEsseenEnvelope>,
) -> Result<(CertifiedValue, CertifiedValue)> {
    law.require_centered()?;
    let series = davis_series_with(law, eps, delta, plan, env)?;
    let lead = davis_leading_term(law.sigma(), delta, eps)?;
    Ok((series, series.shifted(-lead)))
}

/// `ε^{2δ+2}` times the Davis series.
pub fn gs_leading(law: &Law, delta: f64, eps: f64, plan: &EvalPlan) -> Result<f64> {
    law.require_centered()?;
    Ok(davis_series_with(law, eps, delta, plan, None)?.value * eps.powf(2.0 * delta + 2.0))
}

/// `Σ P(|N| ≥ ε√n)` minus `1/ε²` for a standard normal law.
pub fn klesov_remainder(eps: f64, plan: &EvalPlan) -> Result<CertifiedValue> {
    Ok(heyde_klesov_series(&Law::Normal { sigma: 1.0 }, eps, plan)?.shifted(-1.0 / (eps * eps)))
}

/// `ε²·Σ P(|S_n| ≥ εn)`.
pub fn heyde_leading(law: &Law, eps: f64, plan: &EvalPlan) -> Result<f64> {
    law.require_centered()?;
    Ok(heyde_klesov_series(law, eps, plan)?.value * eps * eps)
}

/// Everything needed to run one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mode: SweepMode,
    pub dist: Law,
    pub delta: f64,
    pub eps_grid: Vec<f64>,
    pub plan: EvalPlan,
    pub extrapolation: Extrapolation,
    pub tolerance: f64,
    pub seed: u64,
}

impl SweepSpec {
    /// Default grid, plan, and tolerance for `mode`.
    pub fn new(mode: SweepMode, dist: Law, delta: f64) -> Self {
        Self {
            mode,
            dist,
            delta,
            eps_grid: DEFAULT_EPS_GRID.to_vec(),
            plan: EvalPlan::for_delta(delta),
            extrapolation: Extrapolation::PowerFit,
            tolerance: DEFAULT_TOLERANCE,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(&self.eps_grid)?;
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::Input(format!("delta must lie in [0, 1], got {}", self.delta)));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Input(format!("tolerance must be non-negative, got {}", self.tolerance)));
        }
        if self.mode == SweepMode::KlesovNormal && !matches!(self.dist, Law::Normal { .. }) {
            return Err(Error::Input("klesov_normal requires a normal law".into()));
        }
        self.plan.validate()
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    /// The series as evaluated, before any leading term is removed or scaled.
    pub series_value: f64,
    /// Certified bound on `remainder`.
    pub error_bound: f64,
    /// The quantity whose limit is checked.
    pub remainder: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub log_convention: LogConvention,
    pub plan: EvalPlan,
    pub extrapolation: Extrapolation,
    pub exponent: Option<f64>,
    /// Envelope used for lattice tail bounds, when one was needed.
    pub berry_esseen: Option<BerryEsseenEnvelope>,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub mode: SweepMode,
    pub dist: String,
    pub delta: f64,
    pub records: Vec<SweepRecord>,
    pub extrapolated_limit: Option<f64>,
    pub extrapolation_uncertainty: Option<f64>,
    pub target: Option<f64>,
    pub target_uncertainty: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub metadata: ReportMetadata,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Input(format!("malformed report: {e}")))
    }

    /// One row per ε: `eps,series_value,error_bound,remainder,target,target_uncertainty`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["eps", "series_value", "error_bound", "remainder", "target", "target_uncertainty"])
            .map_err(io)?;
        let opt = |x: Option<f64>| x.map(full).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                full(r.eps),
                full(r.series_value),
                full(r.error_bound),
                full(r.remainder),
                opt(self.target),
                opt(self.target_uncertainty),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

/// Target constant for `spec`, computed without touching the series code.
pub fn sweep_target(spec: &SweepSpec) -> Result<CertifiedValue> {
    let conv = spec.plan.log_convention;
    let delta = spec.delta;
    let sigma = spec.dist.sigma();
    Ok(match spec.mode {
        SweepMode::DavisRemainder => {
            let gamma = gamma_delta_with(delta, GAMMA_TARGET_TOL, conv)?;
            let eta = eta_delta_law(&spec.dist, delta, ETA_TARGET_TOL, conv)?;
            gamma.plus(eta.scaled(-1.0))
        }
        SweepMode::DavisLeading => {
            let p = 2.0 * delta + 2.0;
            CertifiedValue::exact(abs_normal_moment(p)? * sigma.powf(p) / (delta + 1.0))
        }
        SweepMode::KlesovNormal => CertifiedValue::exact(-0.5),
        SweepMode::HeydeLeading => CertifiedValue::exact(sigma * sigma),
        SweepMode::NormalRemainder => gamma_delta_with(delta, GAMMA_TARGET_TOL, conv)?,
        SweepMode::LatticeDifference => eta_delta_law(&spec.dist, delta, ETA_TARGET_TOL, conv)?.scaled(-1.0),
    })
}

fn evaluate_point(spec: &SweepSpec, eps: f64, env: Option<&BerryEsseenEnvelope>) -> Result<SweepRecord> {
    let (law, delta, plan) = (&spec.dist, spec.delta, &spec.plan);
    let (series, quantity) = match spec.mode {
        SweepMode::DavisRemainder => remainder_with(law, delta, eps, plan, env)?,
        SweepMode::DavisLeading => {
            law.require_centered()?;
            let s = davis_series_with(law, eps, delta, plan, env)?;
            (s, s.scaled(eps.powf(2.0 * delta + 2.0)))
        }
        SweepMode::KlesovNormal => {
            let s = heyde_klesov_series(law, eps, plan)?;
            let sigma = law.sigma();
            (s, s.shifted(-(sigma * sigma) / (eps * eps)))
        }
        SweepMode::HeydeLeading => {
            law.require_centered()?;
            let s = heyde_klesov_series(law, eps, plan)?;
            (s, s.scaled(eps * eps))
        }
        SweepMode::NormalRemainder => {
            let s = normal_series(eps, delta, plan)?;
            (s, s.shifted(-davis_leading_term(1.0, delta, eps)?))
        }
        SweepMode::LatticeDifference => {
            let s = match law {
                Law::Lattice(d) => difference_series_with(d, eps / d.std_dev(), delta, plan, env)?,
                Law::Normal { .. } => CertifiedValue::exact(0.0),
            };
            (s, s)
        }
    };
    Ok(SweepRecord { eps, series_value: series.value, error_bound: quantity.error_bound, remainder: quantity.value })
}

/// Runs a sweep. An invalid `spec` is an error; failures while evaluating
/// produce a report with verdict `fail` and the error message attached.
pub fn run_sweep(spec: &SweepSpec) -> Result<VerifyReport> {
    spec.validate()?;
    let needs_envelope = matches!(
        spec.mode,
        SweepMode::DavisRemainder | SweepMode::DavisLeading | SweepMode::LatticeDifference
    );
    let mut report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        mode: spec.mode,
        dist: spec.dist.to_string(),
        delta: if spec.mode.uses_delta() { spec.delta } else { 0.0 },
        records: Vec::new(),
        extrapolated_limit: None,
        extrapolation_uncertainty: None,
        target: None,
        target_uncertainty: None,
        tolerance: spec.tolerance,
        verdict: Verdict::Fail,
        error: None,
        metadata: ReportMetadata {
            log_convention: spec.plan.log_convention,
            plan: spec.plan,
            extrapolation: spec.extrapolation,
            exponent: None,
            berry_esseen: None,
            seed: spec.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };
    if let Err(e) = fill_report(spec, needs_envelope, &mut report) {
        report.verdict = Verdict::Fail;
        report.error = Some(e.to_string());
    }
    Ok(report)
}

fn fill_report(spec: &SweepSpec, needs_envelope: bool, report: &mut VerifyReport) -> Result<()> {
    let env = match (&spec.dist, needs_envelope) {
        (Law::Lattice(d), true) => {
            d.require_centered()?;
            Some(default_envelope(d)?)
        }
        _ => None,
    };
    report.metadata.berry_esseen = env;
    let target = sweep_target(spec)?;
    report.target = Some(target.value);
    report.target_uncertainty = Some(target.error_bound);

    let records: Vec<SweepRecord> = spec
        .eps_grid
        .par_iter()
        .map(|&eps| evaluate_point(spec, eps, env.as_ref()))
        .collect::<Result<_>>()?;
    report.records = records;

    let points: Vec<(f64, f64, f64)> = records_as_points(&report.records);
    let est = extrapolate(&points, spec.extrapolation)?;
    report.extrapolated_limit = Some(est.limit);
    report.extrapolation_uncertainty = Some(est.uncertainty);
    report.metadata.exponent = est.exponent;
    let combined = est.uncertainty + target.error_bound;
    report.verdict = if (est.limit - target.value).abs() <= combined + spec.tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(())
}

fn records_as_points(records: &[SweepRecord]) -> Vec<(f64, f64, f64)> {
    records.iter().map(|r| (r.eps, r.remainder, r.error_bound)).collect()
}
