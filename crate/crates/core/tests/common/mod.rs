#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

/// Law of `S_n` by repeated naive convolution of the atom list.
pub fn naive_sum_law(atoms: &[(i64, f64)], n: u64) -> BTreeMap<i64, f64> {
    let mut law = BTreeMap::from([(0i64, 1.0)]);
    for _ in 0..n {
        let mut next = BTreeMap::new();
        for (&s, &p) in &law {
            for &(o, q) in atoms {
                *next.entry(s + o).or_insert(0.0) += p * q;
            }
        }
        law = next;
    }
    law
}

/// `ln(max(n, e))` or `ln n`.
pub fn log_of(n: f64, paper: bool) -> f64 {
    if paper {
        n.max(std::f64::consts::E).ln()
    } else {
        n.ln()
    }
}

fn weight(n: u64, delta: f64, paper: bool) -> f64 {
    let l = log_of(n as f64, paper);
    let p = if delta == 0.0 { 1.0 } else { l.powf(delta) };
    p / n as f64
}

fn normal_two_sided(x: f64) -> f64 {
    libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration.
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (1..=m)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let nodes = gauss_legendre(16);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|j| {
            let mid = a + (j as f64 + 0.5) * h;
            nodes.iter().map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// `Σ_{n≥N} (ln n)^δ/n · P(|N| ≥ ε√(ln n))` for `N ≥ 3`: quadrature in
/// `u = ln x` plus the first two Euler–Maclaurin endpoint terms. Returns the
/// estimate and an error allowance from halving the panel width.
fn normal_tail_sum(eps: f64, delta: f64, n: u64) -> (f64, f64) {
    let a = (n as f64).ln();
    let b = a + 1600.0 / (eps * eps);
    let g = |u: f64| u.powf(delta) * normal_two_sided(eps * u.sqrt());
    let panels = ((b - a) * 2.0).ceil() as usize;
    let coarse = integrate(g, a, b, panels);
    let fine = integrate(g, a, b, 2 * panels);
    let f = |x: f64| x.ln().powf(delta) / x * normal_two_sided(eps * x.ln().sqrt());
    let x = n as f64;
    let h = 1e-2 * x;
    let df = (f(x + h) - f(x - h)) / (2.0 * h);
    (fine + f(x) / 2.0 - df / 12.0, (fine - coarse).abs() + 1e-14 * fine.abs())
}

/// Normal-case series by direct summation to 10⁵ plus a quadrature tail.
pub fn normal_series_oracle(eps: f64, delta: f64, paper: bool) -> (f64, f64) {
    const HEAD: u64 = 100_000;
    let mut head = 0.0;
    for n in 1..HEAD {
        let w = if !paper && n == 1 && delta > 0.0 { 0.0 } else { weight(n, delta, paper) };
        head += w * normal_two_sided(eps * log_of(n as f64, paper).sqrt());
    }
    let (tail, err) = normal_tail_sum(eps, delta, HEAD);
    (head + tail, err + 1e-13 * head)
}

/// Davis series of the ±1 walk for several `(ε, δ)` at once: exact
/// probabilities from Pascal's rule up to `head`, then normal terms, with the
/// lattice correction beyond `head` bounded by the two-sided Berry–Esseen
/// inequality `2·0.4748/√n`.
pub fn davis_rademacher_oracle(cases: &[(f64, f64)], head: u64, paper: bool) -> Vec<(f64, f64)> {
    let mut sums = vec![0.0; cases.len()];
    // pmf of the number of +1 steps.
    let mut pmf = vec![1.0f64];
    let mut suffix = Vec::new();
    for n in 1..=head {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, p) in pmf.iter().enumerate() {
            next[k] += 0.5 * p;
            next[k + 1] += 0.5 * p;
        }
        pmf = next;
        suffix.clear();
        suffix.resize(pmf.len() + 1, 0.0);
        for k in (0..pmf.len()).rev() {
            suffix[k] = suffix[k + 1] + pmf[k];
        }
        let nf = n as f64;
        for (s, &(eps, delta)) in sums.iter_mut().zip(cases) {
            let t = eps * (nf * log_of(nf, paper)).sqrt();
            let p = if t <= 0.0 {
                1.0
            } else {
                let k = ((nf + t) / 2.0).ceil() as usize;
                if k > n as usize { 0.0 } else { (2.0 * suffix[k]).min(1.0) }
            };
            let w = if !paper && n == 1 && delta > 0.0 { 0.0 } else { weight(n, delta, paper) };
            *s += w * p;
        }
    }
    cases
        .iter()
        .zip(sums)
        .map(|(&(eps, delta), s)| {
            let mut middle = 0.0;
            let upto = 1_000_000u64;
            for n in head + 1..upto {
                middle += weight(n, delta, paper) * normal_two_sided(eps * (n as f64).ln().sqrt());
            }
            let (tail, err) = normal_tail_sum(eps, delta, upto);
            // Σ_{n>head} (ln n)^δ n^{-3/2} ≤ ∫_{head}^∞, with the integrand decreasing past e^{2δ/3}.
            let be = 2.0 * 0.4748 * integrate(|u: f64| u.powf(delta) * (-0.5 * u).exp(), (head as f64).ln(), 200.0, 4000);
            (s + middle + tail, err + be + 1e-12 * s)
        })
        .collect()
}

/// Golden constants generated by `tests/golden/generate_golden.py`.
pub struct Golden {
    pub gamma: Vec<(f64, String, f64)>,
    pub eta_rademacher: Vec<(f64, String, f64)>,
}

impl Golden {
    pub fn load() -> Self {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/constants.json");
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let rows = |key: &str| {
            v[key]
                .as_array()
                .unwrap()
                .iter()
                .map(|r| {
                    (
                        r["delta"].as_f64().unwrap(),
                        r["convention"].as_str().unwrap().to_string(),
                        r["value"].as_str().unwrap().parse::<f64>().unwrap(),
                    )
                })
                .collect()
        };
        Golden { gamma: rows("gamma"), eta_rademacher: rows("eta_rademacher") }
    }

    fn find(rows: &[(f64, String, f64)], delta: f64, conv: &str) -> f64 {
        rows.iter().find(|r| r.0 == delta && r.1 == conv).unwrap_or_else(|| panic!("no golden row {delta} {conv}")).2
    }

    pub fn gamma(&self, delta: f64, conv: &str) -> f64 {
        Self::find(&self.gamma, delta, conv)
    }

    pub fn eta_rademacher(&self, delta: f64, conv: &str) -> f64 {
        Self::find(&self.eta_rademacher, delta, conv)
    }
}
