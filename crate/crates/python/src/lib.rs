use asymptotica::dist::{self, LatticeDistribution, Law};
use asymptotica::verify::{self, Extrapolation, SweepMode, SweepSpec};
use asymptotica::{constants, series, CertifiedValue, Error, EvalPlan, LogConvention};
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::UnachievableTolerance { .. } | Error::Convergence(_) => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn lattice(spec: &str) -> PyResult<LatticeDistribution> {
    match parse::<Law>(spec)? {
        Law::Lattice(d) => Ok(d),
        Law::Normal { .. } => Err(PyValueError::new_err("a lattice distribution is required")),
    }
}

/// A value with an absolute error bound.
#[pyclass(name = "CertifiedValue", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCertified {
    #[pyo3(get)]
    value: f64,
    #[pyo3(get)]
    error_bound: f64,
    #[pyo3(get)]
    terms_used: u64,
    #[pyo3(get)]
    rigorous: bool,
}

#[pymethods]
impl PyCertified {
    fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.error_bound
    }

    fn __repr__(&self) -> String {
        format!("CertifiedValue({} ± {:e}, terms={})", self.value, self.error_bound, self.terms_used)
    }
}

impl From<CertifiedValue> for PyCertified {
    fn from(v: CertifiedValue) -> Self {
        Self {
            value: v.value,
            error_bound: v.error_bound,
            terms_used: v.terms_used,
            rigorous: v.kind == asymptotica::BoundKind::Rigorous,
        }
    }
}

fn plan(delta: f64, convention: &str, n_exact: Option<u64>, n_normal: Option<u64>) -> PyResult<EvalPlan> {
    let mut p = EvalPlan::for_delta(delta).with_convention(parse::<LogConvention>(convention)?);
    if let Some(n) = n_exact {
        p.n_exact = n;
    }
    if let Some(n) = n_normal {
        p.n_normal = n;
    }
    p.validate().map_err(to_py)?;
    Ok(p)
}

#[pyfunction]
#[pyo3(signature = (delta, tol = 1e-10, convention = "paper"))]
fn gamma_delta(py: Python<'_>, delta: f64, tol: f64, convention: &str) -> PyResult<PyCertified> {
    let conv = parse(convention)?;
    py.detach(|| constants::gamma_delta_with(delta, tol, conv)).map(Into::into).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (dist, delta, tol = 1e-8, convention = "paper"))]
fn eta_delta(py: Python<'_>, dist: &str, delta: f64, tol: f64, convention: &str) -> PyResult<PyCertified> {
    let law: Law = parse(dist)?;
    let conv = parse(convention)?;
    py.detach(|| constants::eta_delta_law(&law, delta, tol, conv)).map(Into::into).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (eps, delta, convention = "paper", n_normal = None))]
fn normal_series(py: Python<'_>, eps: f64, delta: f64, convention: &str, n_normal: Option<u64>) -> PyResult<PyCertified> {
    let p = plan(delta, convention, Some(1), n_normal)?;
    py.detach(|| series::normal_series(eps, delta, &p)).map(Into::into).map_err(to_py)
}

/// `Σ (log n)^δ/n · P(|S_n| ≥ ε√(n log n))`.
#[pyfunction]
#[pyo3(signature = (dist, eps, delta, convention = "paper", n_exact = None, n_normal = None))]
fn davis_series(
    py: Python<'_>,
    dist: &str,
    eps: f64,
    delta: f64,
    convention: &str,
    n_exact: Option<u64>,
    n_normal: Option<u64>,
) -> PyResult<PyCertified> {
    let law: Law = parse(dist)?;
    let p = plan(delta, convention, n_exact, n_normal)?;
    py.detach(|| series::davis_series(&law, eps, delta, &p)).map(Into::into).map_err(to_py)
}

/// Lattice correction series; `eps` is on the same scale as `davis_series`.
#[pyfunction]
#[pyo3(signature = (dist, eps, delta, convention = "paper", n_exact = None))]
fn difference_series(
    py: Python<'_>,
    dist: &str,
    eps: f64,
    delta: f64,
    convention: &str,
    n_exact: Option<u64>,
) -> PyResult<PyCertified> {
    let d = lattice(dist)?;
    let p = plan(delta, convention, n_exact, None)?;
    py.detach(|| series::difference_series(&d, eps / d.std_dev(), delta, &p)).map(Into::into).map_err(to_py)
}

/// `Σ P(|S_n| ≥ εn)`.
#[pyfunction]
#[pyo3(signature = (dist, eps, n_normal = None))]
fn heyde_klesov_series(py: Python<'_>, dist: &str, eps: f64, n_normal: Option<u64>) -> PyResult<PyCertified> {
    let law: Law = parse(dist)?;
    let p = plan(0.0, "paper", None, n_normal)?;
    py.detach(|| series::heyde_klesov_series(&law, eps, &p)).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn pmf_at_zero(dist: &str, n: u64) -> PyResult<f64> {
    dist::pmf_at_zero(&lattice(dist)?, n).map_err(to_py)
}

#[pyfunction]
fn tail_two_sided(dist: &str, n: u64, t: f64) -> PyResult<f64> {
    dist::tail_two_sided(&lattice(dist)?, n, t).map_err(to_py)
}

#[pyfunction]
fn kolmogorov_two_sided(dist: &str, n: u64) -> PyResult<f64> {
    dist::kolmogorov_two_sided(&lattice(dist)?, n).map_err(to_py)
}

/// Monte Carlo `P(|S_n| ≥ t)`; the bound is one standard error.
#[pyfunction]
#[pyo3(signature = (dist, n, t, reps = 100_000, seed = 0))]
fn mc_tail(py: Python<'_>, dist: &str, n: u64, t: f64, reps: u64, seed: u64) -> PyResult<PyCertified> {
    let d = lattice(dist)?;
    py.detach(|| dist::mc_tail(&d, n, t, reps, seed)).map(Into::into).map_err(to_py)
}

/// Runs an ε-sweep and returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (mode, dist = "normal", delta = 0.0, eps_grid = None, tolerance = 0.02, extrapolation = "power_fit", convention = "paper", seed = 0))]
#[allow(clippy::too_many_arguments)]
fn run_sweep(
    py: Python<'_>,
    mode: &str,
    dist: &str,
    delta: f64,
    eps_grid: Option<Vec<f64>>,
    tolerance: f64,
    extrapolation: &str,
    convention: &str,
    seed: u64,
) -> PyResult<String> {
    let mut spec = SweepSpec::new(parse::<SweepMode>(mode)?, parse(dist)?, delta);
    spec.plan = plan(delta, convention, None, None)?;
    if let Some(g) = eps_grid {
        spec.eps_grid = g;
    }
    spec.tolerance = tolerance;
    spec.extrapolation = parse::<Extrapolation>(extrapolation)?;
    spec.seed = seed;
    let report = py.detach(|| verify::run_sweep(&spec)).map_err(to_py)?;
    report.to_json().map_err(to_py)
}

#[pymodule]
fn asymptotica_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCertified>()?;
    m.add_function(wrap_pyfunction!(gamma_delta, m)?)?;
    m.add_function(wrap_pyfunction!(eta_delta, m)?)?;
    m.add_function(wrap_pyfunction!(normal_series, m)?)?;
    m.add_function(wrap_pyfunction!(davis_series, m)?)?;
    m.add_function(wrap_pyfunction!(difference_series, m)?)?;
    m.add_function(wrap_pyfunction!(heyde_klesov_series, m)?)?;
    m.add_function(wrap_pyfunction!(pmf_at_zero, m)?)?;
    m.add_function(wrap_pyfunction!(tail_two_sided, m)?)?;
    m.add_function(wrap_pyfunction!(kolmogorov_two_sided, m)?)?;
    m.add_function(wrap_pyfunction!(mc_tail, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
