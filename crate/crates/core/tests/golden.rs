mod common;

use asymptotica::constants::{eta_delta_with, gamma_delta_with};
use asymptotica::{LatticeDistribution, LogConvention};
use common::Golden;

fn conv(name: &str) -> LogConvention {
    name.parse().unwrap()
}

#[test]
fn gamma_matches_golden_within_certified_bound() {
    let golden = Golden::load();
    assert_eq!(golden.gamma.len(), 6);
    for (delta, name, expected) in &golden.gamma {
        let v = gamma_delta_with(*delta, 1e-10, conv(name)).unwrap();
        assert!(
            (v.value - expected).abs() <= v.error_bound + 1e-15,
            "gamma({delta}, {name}) = {v}, golden {expected}"
        );
    }
}

#[test]
fn eta_matches_golden_within_certified_bound() {
    let golden = Golden::load();
    let r = LatticeDistribution::rademacher();
    for (delta, name, expected) in &golden.eta_rademacher {
        let v = eta_delta_with(&r, *delta, 1e-8, conv(name)).unwrap();
        assert!(
            (v.value - expected).abs() <= v.error_bound + 1e-15,
            "eta({delta}, {name}) = {v}, golden {expected}"
        );
    }
}

#[test]
fn conventions_differ_only_in_first_two_weights() {
    let golden = Golden::load();
    for delta in [0.0, 0.5, 1.0] {
        let shift = golden.gamma(delta, "paper") - golden.gamma(delta, "pure-ln");
        let zero = if delta == 0.0 { 1.0 } else { 0.0 };
        let expected = (1.0 - zero) + (1.0 - 2f64.ln().powf(delta)) / 2.0;
        assert!((shift - expected).abs() < 1e-15, "delta {delta}");
    }
}
