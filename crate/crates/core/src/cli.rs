//! Command-line front end.
//!
//! Exit codes: 0 success or passing verdict, 1 failing verdict, 2 usage or
//! input error, 3 tolerance not achievable.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::certified::CertifiedValue;
use crate::constants::{eta_delta_law, gamma_delta_with};
use crate::dist::{kolmogorov_two_sided, mc_tail, pmf_at_zero, tail_two_sided, LatticeDistribution, Law};
use crate::error::{Error, Result};
use crate::series::{davis_series, difference_series, heyde_klesov_series, normal_series, EvalPlan, TailMethod};
use crate::specfn::LogConvention;
use crate::verify::{
    davis_leading_term, run_sweep, write_atomic, Extrapolation, SweepMode, SweepSpec, VerifyReport, DEFAULT_EPS_GRID,
    DEFAULT_TOLERANCE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ASYMPTOTICA_THREADS";

const DEFAULT_CONSTANT_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "asymptotica", version, about = "Certified constants and epsilon-sweeps for lattice random walks")]
struct Cli {
    /// TOML file with default option values; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Logarithm convention: `paper` (ln(max(n, e))) or `pure-ln`.
    #[arg(long, global = true)]
    convention: Option<LogConvention>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// The constants γ_δ and η_δ.
    Constants(ConstantsArgs),
    /// Evaluate one series at one ε.
    Series(SeriesArgs),
    /// Run an ε-sweep and compare its extrapolated limit with the target.
    Verify(VerifyArgs),
    /// Exact distributional quantities of S_n.
    Dist(DistArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConstantKind {
    Gamma,
    Eta,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SeriesKind {
    Davis,
    Klesov,
    Normal,
    Difference,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistKind {
    Pzero,
    Kolmogorov,
    Tail,
    Mc,
}

#[derive(Debug, Args)]
struct LawArgs {
    /// Increment law, e.g. `rademacher`, `uniform3`, `lattice:-1:0.5,1:0.5,scale=2`, `normal`.
    #[arg(long)]
    dist: Option<String>,
    /// Use an exactly normal increment with unit variance.
    #[arg(long, conflicts_with = "dist")]
    normal: bool,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    n_exact: Option<u64>,
    #[arg(long)]
    n_normal: Option<u64>,
    /// `integral_em` or `bound_only`.
    #[arg(long)]
    tail_method: Option<TailMethod>,
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    #[arg(value_enum)]
    kind: ConstantKind,
    #[command(flatten)]
    law: LawArgs,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct SeriesArgs {
    #[arg(value_enum)]
    kind: SeriesKind,
    #[command(flatten)]
    law: LawArgs,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    /// Also print the leading term and the series minus it.
    #[arg(long)]
    remainder: bool,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// theorem11, gs, klesov, heyde, prop21 or prop31.
    mode: SweepMode,
    #[command(flatten)]
    law: LawArgs,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eps_grid: Option<Vec<f64>>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// `power_fit` or `last_point`.
    #[arg(long)]
    extrapolation: Option<Extrapolation>,
    /// Report path (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-ε table path (CSV).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Debug, Args)]
struct DistArgs {
    #[arg(value_enum)]
    kind: DistKind,
    #[command(flatten)]
    law: LawArgs,
    #[arg(long)]
    n: Option<u64>,
    /// Threshold for `tail` and `mc`.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Values a `--config` file may supply.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dist: Option<String>,
    delta: Option<f64>,
    eps: Option<f64>,
    eps_grid: Option<Vec<f64>>,
    tol: Option<f64>,
    tolerance: Option<f64>,
    convention: Option<String>,
    format: Option<Format>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    seed: Option<u64>,
    n: Option<u64>,
    t: Option<f64>,
    reps: Option<u64>,
    n_exact: Option<u64>,
    n_normal: Option<u64>,
    tail_method: Option<String>,
    extrapolation: Option<String>,
    threads: Option<usize>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }
}

/// Flag value, else config value, else nothing.
fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn parse_opt<T: std::str::FromStr<Err = Error>>(s: Option<&String>) -> Result<Option<T>> {
    s.map(|v| v.parse()).transpose()
}

struct Context {
    file: FileConfig,
    format: Format,
    convention: LogConvention,
}

impl Context {
    fn law(&self, args: &LawArgs) -> Result<Option<Law>> {
        if args.normal {
            return Ok(Some(Law::Normal { sigma: 1.0 }));
        }
        pick(args.dist.as_ref(), self.file.dist.as_ref()).map(|s| s.parse()).transpose()
    }

    fn require_law(&self, args: &LawArgs) -> Result<Law> {
        self.law(args)?.ok_or_else(|| Error::Input("missing --dist (or --normal)".into()))
    }

    fn lattice(&self, args: &LawArgs) -> Result<LatticeDistribution> {
        match self.require_law(args)? {
            Law::Lattice(d) => Ok(d),
            Law::Normal { .. } => Err(Error::Input("this command needs a lattice distribution".into())),
        }
    }

    fn delta(&self, flag: Option<f64>) -> f64 {
        pick(flag, self.file.delta).unwrap_or(0.0)
    }

    fn plan(&self, delta: f64, args: &PlanArgs) -> Result<EvalPlan> {
        let mut plan = EvalPlan::for_delta(delta).with_convention(self.convention);
        if let Some(n) = pick(args.n_exact, self.file.n_exact) {
            plan.n_exact = n;
        }
        if let Some(n) = pick(args.n_normal, self.file.n_normal) {
            plan.n_normal = n;
        }
        if let Some(t) = pick(args.tail_method, parse_opt(self.file.tail_method.as_ref())?) {
            plan.tail_method = t;
        }
        plan.validate()?;
        Ok(plan)
    }
}

/// A flat named record printed as text, JSON, or one CSV row.
struct Row(Vec<(&'static str, Field)>);

enum Field {
    Num(f64),
    Int(u64),
}

impl Field {
    fn text(&self) -> String {
        match self {
            Field::Num(x) if *x == 0.0 || (1e-4..1e15).contains(&x.abs()) => x.to_string(),
            Field::Num(x) => format!("{x:e}"),
            Field::Int(n) => n.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Field::Num(x) => serde_json::json!(x),
            Field::Int(n) => serde_json::json!(n),
        }
    }

    fn csv(&self) -> String {
        match self {
            Field::Num(x) => format!("{x:.16e}"),
            Field::Int(n) => n.to_string(),
        }
    }
}

impl Row {
    fn certified(v: &CertifiedValue) -> Self {
        Row(vec![
            ("value", Field::Num(v.value)),
            ("error_bound", Field::Num(v.error_bound)),
            ("terms_used", Field::Int(v.terms_used)),
        ])
    }

    fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Text => {
                let vals: Vec<String> = self.0.iter().map(|(_, f)| f.text()).collect();
                vals.join(" ") + "\n"
            }
            Format::Json => {
                let map: serde_json::Map<String, serde_json::Value> =
                    self.0.iter().map(|(k, f)| (k.to_string(), f.json())).collect();
                serde_json::to_string_pretty(&map).map_err(|e| Error::Io(e.to_string()))? + "\n"
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| Error::Io(e.to_string());
                w.write_record(self.0.iter().map(|(k, _)| *k)).map_err(io)?;
                w.write_record(self.0.iter().map(|(_, f)| f.csv())).map_err(io)?;
                String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
                    .map_err(|e| Error::Io(e.to_string()))?
            }
        })
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnachievableTolerance { .. } => EXIT_TOLERANCE,
        _ => EXIT_USAGE,
    }
}

fn configure_threads(file: &FileConfig) {
    let env = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    if let Some(n) = env.or(file.threads).filter(|&n| n > 0) {
        // Fails only if a global pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    configure_threads(&file);
    let convention = match cli.convention {
        Some(c) => c,
        None => parse_opt(file.convention.as_ref())?.unwrap_or_default(),
    };
    let format = pick(cli.format, file.format).unwrap_or(Format::Text);
    let ctx = Context { file, format, convention };
    match cli.command {
        Command::Constants(a) => cmd_constants(&ctx, &a, out),
        Command::Series(a) => cmd_series(&ctx, &a, out),
        Command::Verify(a) => cmd_verify(&ctx, &a, out),
        Command::Dist(a) => cmd_dist(&ctx, &a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn cmd_constants(ctx: &Context, a: &ConstantsArgs, out: &mut dyn Write) -> Result<i32> {
    let delta = ctx.delta(a.delta);
    let tol = pick(a.tol, ctx.file.tol).unwrap_or(DEFAULT_CONSTANT_TOL);
    let value = match a.kind {
        ConstantKind::Gamma => gamma_delta_with(delta, tol, ctx.convention)?,
        ConstantKind::Eta => eta_delta_law(&ctx.require_law(&a.law)?, delta, tol, ctx.convention)?,
    };
    emit(out, &Row::certified(&value).render(ctx.format)?)?;
    Ok(EXIT_OK)
}

fn cmd_series(ctx: &Context, a: &SeriesArgs, out: &mut dyn Write) -> Result<i32> {
    let delta = ctx.delta(a.delta);
    let eps = pick(a.eps, ctx.file.eps).ok_or_else(|| Error::Input("missing --eps".into()))?;
    let plan = ctx.plan(delta, &a.plan)?;
    let (value, leading) = match a.kind {
        SeriesKind::Davis => {
            let law = ctx.require_law(&a.law)?;
            let v = davis_series(&law, eps, delta, &plan)?;
            (v, davis_leading_term(law.sigma(), delta, eps)?)
        }
        SeriesKind::Klesov => {
            let law = ctx.require_law(&a.law)?;
            let v = heyde_klesov_series(&law, eps, &plan)?;
            let s = law.sigma();
            (v, s * s / (eps * eps))
        }
        SeriesKind::Normal => {
            let v = normal_series(eps, delta, &plan)?;
            (v, davis_leading_term(1.0, delta, eps)?)
        }
        SeriesKind::Difference => {
            let d = ctx.lattice(&a.law)?;
            (difference_series(&d, eps / d.std_dev(), delta, &plan)?, 0.0)
        }
    };
    let mut row = Row::certified(&value);
    if a.remainder {
        row.0.push(("leading_term", Field::Num(leading)));
        row.0.push(("remainder", Field::Num(value.value - leading)));
    }
    emit(out, &row.render(ctx.format)?)?;
    Ok(EXIT_OK)
}

fn cmd_verify(ctx: &Context, a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let law = match ctx.law(&a.law)? {
        Some(l) => l,
        None if a.mode == SweepMode::KlesovNormal => Law::Normal { sigma: 1.0 },
        None => return Err(Error::Input("missing --dist (or --normal)".into())),
    };
    let delta = ctx.delta(a.delta);
    let mut spec = SweepSpec::new(a.mode, law, delta);
    spec.plan = ctx.plan(delta, &a.plan)?;
    spec.eps_grid = pick(a.eps_grid.clone(), ctx.file.eps_grid.clone()).unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec());
    spec.tolerance = pick(a.tolerance, ctx.file.tolerance).unwrap_or(DEFAULT_TOLERANCE);
    if let Some(x) = pick(a.extrapolation, parse_opt(ctx.file.extrapolation.as_ref())?) {
        spec.extrapolation = x;
    }
    spec.seed = pick(a.seed, ctx.file.seed).unwrap_or(0);

    let report = run_sweep(&spec)?;
    if let Some(path) = pick(a.out.as_ref(), ctx.file.out.as_ref()) {
        write_atomic(path, report.to_json()?.as_bytes())?;
    }
    if let Some(path) = pick(a.csv.as_ref(), ctx.file.csv.as_ref()) {
        write_atomic(path, report.to_csv()?.as_bytes())?;
    }
    let text = match ctx.format {
        Format::Json => report.to_json()? + "\n",
        Format::Csv => report.to_csv()?,
        Format::Text => summary(&report),
    };
    emit(out, &text)?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY_FAIL })
}

fn summary(r: &VerifyReport) -> String {
    let mut s = String::new();
    for rec in &r.records {
        s += &format!("eps={:<8} remainder={:.10} ± {:.3e}\n", rec.eps, rec.remainder, rec.error_bound);
    }
    let est = |v: Option<f64>, u: Option<f64>| match (v, u) {
        (Some(v), Some(u)) => format!("{v:.8} ± {u:.3e}"),
        _ => "n/a".into(),
    };
    s += &format!(
        "{} {}: limit {} target {} tolerance {} -> {}\n",
        r.mode,
        r.dist,
        est(r.extrapolated_limit, r.extrapolation_uncertainty),
        est(r.target, r.target_uncertainty),
        r.tolerance,
        r.verdict
    );
    if let Some(e) = &r.error {
        s += &format!("error: {e}\n");
    }
    s
}

fn cmd_dist(ctx: &Context, a: &DistArgs, out: &mut dyn Write) -> Result<i32> {
    let n = pick(a.n, ctx.file.n).ok_or_else(|| Error::Input("missing --n".into()))?;
    if n == 0 {
        return Err(Error::Input("--n must be at least 1".into()));
    }
    let d = ctx.lattice(&a.law)?;
    let threshold = || pick(a.t, ctx.file.t).ok_or_else(|| Error::Input("missing --t".into()));
    let row = match a.kind {
        DistKind::Pzero => Row(vec![("p_zero", Field::Num(pmf_at_zero(&d, n)?))]),
        DistKind::Kolmogorov => Row(vec![("kolmogorov", Field::Num(kolmogorov_two_sided(&d, n)?))]),
        DistKind::Tail => Row(vec![("tail", Field::Num(tail_two_sided(&d, n, threshold()?)?))]),
        DistKind::Mc => {
            let reps = pick(a.reps, ctx.file.reps).unwrap_or(100_000);
            let seed = pick(a.seed, ctx.file.seed).unwrap_or(0);
            let v = mc_tail(&d, n, threshold()?, reps, seed)?;
            Row(vec![
                ("tail", Field::Num(v.value)),
                ("std_error", Field::Num(v.error_bound)),
                ("reps", Field::Int(reps)),
            ])
        }
    };
    emit(out, &row.render(ctx.format)?)?;
    Ok(EXIT_OK)
}
