use serde::{Deserialize, Serialize};

/// How the `error_bound` of a [`CertifiedValue`] should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// The true quantity lies in `[value − error_bound, value + error_bound]`.
    Rigorous,
    /// `error_bound` is one Monte Carlo standard error.
    StandardError,
}

/// A numeric result together with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub value: f64,
    pub error_bound: f64,
    pub terms_used: u64,
    pub kind: BoundKind,
}

impl CertifiedValue {
    pub fn rigorous(value: f64, error_bound: f64, terms_used: u64) -> Self {
        debug_assert!(error_bound >= 0.0, "negative error bound {error_bound}");
        Self { value, error_bound, terms_used, kind: BoundKind::Rigorous }
    }

    pub fn standard_error(value: f64, se: f64, terms_used: u64) -> Self {
        Self { value, error_bound: se, terms_used, kind: BoundKind::StandardError }
    }

    pub fn exact(value: f64) -> Self {
        Self::rigorous(value, 0.0, 0)
    }

    pub fn lower(&self) -> f64 {
        self.value - self.error_bound
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }

    /// Scales value and bound by a constant.
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error_bound: self.error_bound * factor.abs(),
            ..self
        }
    }

    /// Shifts the value by an exactly known constant.
    pub fn shifted(self, offset: f64) -> Self {
        Self { value: self.value + offset, ..self }
    }

    /// Sum of two independent results; bounds add.
    pub fn plus(self, other: CertifiedValue) -> Self {
        let kind = if self.kind == BoundKind::Rigorous && other.kind == BoundKind::Rigorous {
            BoundKind::Rigorous
        } else {
            BoundKind::StandardError
        };
        Self {
            value: self.value + other.value,
            error_bound: self.error_bound + other.error_bound,
            terms_used: self.terms_used.max(other.terms_used),
            kind,
        }
    }
}

impl std::fmt::Display for CertifiedValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.17e} ± {:.3e}", self.value, self.error_bound)
    }
}
