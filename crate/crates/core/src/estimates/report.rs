use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grid::Cylinder;

/// Left-hand sides at or below this value count as zero in a 0/0 outcome.
pub const ZERO_TOL: f64 = 1e-12;

/// How the ratio lhs / Σ rhs came out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    /// Σ rhs > 0 and the ratio is a number.
    Finite,
    /// Σ rhs = 0 and lhs vanishes.
    Degenerate,
    /// Σ rhs = 0 while lhs does not vanish.
    Unbounded,
}

/// A labelled cylinder entering a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NamedCylinder {
    pub label: &'static str,
    pub cylinder: Cylinder,
}

/// Both sides of one inequality with the constant that makes it an equality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs_terms: BTreeMap<String, f64>,
    pub rhs_sum: f64,
    pub outcome: Outcome,
    /// lhs / Σ rhs; `None` unless the outcome is finite.
    pub empirical_constant: Option<f64>,
    /// Largest constant accepted.
    pub tolerance: f64,
    pub pass: bool,
    pub geometry: Vec<NamedCylinder>,
    /// Auxiliary checks evaluated alongside the inequality.
    pub side_checks: BTreeMap<String, bool>,
    /// Informational flags that do not affect `pass`.
    pub flags: BTreeMap<String, bool>,
}

impl InequalityReport {
    pub fn new(name: &str, lhs: f64, rhs_terms: &[(&str, f64)], tolerance: f64) -> Self {
        let rhs_terms: BTreeMap<String, f64> = rhs_terms.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let rhs_sum: f64 = rhs_terms.values().sum();
        let (outcome, empirical_constant) = if rhs_sum > 0.0 {
            (Outcome::Finite, Some(lhs / rhs_sum))
        } else if lhs.abs() <= ZERO_TOL {
            (Outcome::Degenerate, None)
        } else {
            (Outcome::Unbounded, None)
        };
        let pass = match outcome {
            Outcome::Finite => empirical_constant.is_some_and(|c| c.is_finite() && c <= tolerance),
            Outcome::Degenerate => true,
            Outcome::Unbounded => false,
        };
        InequalityReport {
            name: name.to_string(),
            lhs,
            rhs_terms,
            rhs_sum,
            outcome,
            empirical_constant,
            tolerance,
            pass,
            geometry: Vec::new(),
            side_checks: BTreeMap::new(),
            flags: BTreeMap::new(),
        }
    }

    pub fn with_cylinder(mut self, label: &'static str, cylinder: Cylinder) -> Self {
        self.geometry.push(NamedCylinder { label, cylinder });
        self
    }

    /// Records a side check; a failing side check fails the report.
    pub fn with_check(mut self, label: &str, ok: bool) -> Self {
        self.side_checks.insert(label.to_string(), ok);
        self.pass &= ok;
        self
    }

    pub fn with_flag(mut self, label: &str, value: bool) -> Self {
        self.flags.insert(label.to_string(), value);
        self
    }

    /// Empirical constant, with 0 for a degenerate outcome.
    pub fn constant_or_zero(&self) -> f64 {
        match self.outcome {
            Outcome::Finite => self.empirical_constant.unwrap_or(f64::NAN),
            Outcome::Degenerate => 0.0,
            Outcome::Unbounded => f64::INFINITY,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}
