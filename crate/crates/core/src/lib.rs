//! Certified constants, series, and ε-sweep checks for precise asymptotics
//! of sums of i.i.d. lattice and normal increments.
//!
//! The central objects are the weighted tail series
//! `Σ (log n)^δ/n · P(|S_n| ≥ ε√(n log n))` and `Σ P(|S_n| ≥ εn)`, their
//! leading behaviour as `ε → 0`, and the constants `γ_δ` and `η_δ` that
//! describe the remainder.

// Series coefficients are kept at the digits they were published with, and
// `!(x > 0.0)` style guards are meant to reject NaN too.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod certified;
pub mod cli;
pub mod constants;
pub mod dist;
pub mod error;
pub mod series;
pub mod specfn;
pub mod summation;
pub mod verify;

pub use certified::{BoundKind, CertifiedValue};
pub use constants::{eta_delta, gamma_delta, gamma_n_delta};
pub use dist::{LatticeDistribution, Law};
pub use error::{Error, Result};
pub use series::{EvalPlan, TailMethod};
pub use specfn::LogConvention;
pub use verify::{SweepSpec, VerifyReport};
