use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cli::RunManifest;
use crate::estimates::InequalityReport;

/// One measured quantity of a suite: a JSON line of the verification report.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub suite: &'static str,
    pub check: String,
    /// Identifies the case within the check; equal keys are compared across levels.
    pub key: String,
    pub level: usize,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Value enters the refinement stability table.
    pub tracked: bool,
    pub detail: serde_json::Value,
}

impl Record {
    pub fn new(suite: &'static str, check: &str, key: impl Into<String>, value: f64, tolerance: f64, pass: bool) -> Self {
        Record {
            suite,
            check: check.to_string(),
            key: key.into(),
            level: 0,
            value,
            tolerance,
            pass,
            tracked: false,
            detail: serde_json::Value::Null,
        }
    }

    /// Passes iff `value` ≤ `tolerance`.
    pub fn at_most(suite: &'static str, check: &str, key: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Record::new(suite, check, key, value, tolerance, value <= tolerance)
    }

    pub fn from_report(suite: &'static str, key: impl Into<String>, r: &InequalityReport) -> Self {
        let mut rec = Record::new(suite, &r.name, key, r.constant_or_zero(), r.tolerance, r.pass);
        rec.tracked = true;
        rec.detail = serde_json::to_value(r).unwrap_or(serde_json::Value::Null);
        rec
    }

    pub fn tracked(mut self) -> Self {
        self.tracked = true;
        self
    }

    pub fn with_detail<T: Serialize>(mut self, d: &T) -> Self {
        self.detail = serde_json::to_value(d).unwrap_or(serde_json::Value::Null);
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Inputs shared by every suite of one run.
#[derive(Debug, Clone, Copy)]
pub struct SuiteContext<'a> {
    pub manifest: &'a RunManifest,
    /// Grid refinement level: suites multiply their base resolution by 2^level.
    pub level: usize,
}

impl SuiteContext<'_> {
    /// Deterministic generator for one suite and stream.
    pub fn rng(&self, suite: &str, stream: u64) -> ChaCha8Rng {
        let tag = suite.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
        ChaCha8Rng::seed_from_u64(self.manifest.seed ^ tag ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    pub fn refine(&self) -> usize {
        1 << self.level
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.manifest.tolerance(name)
    }
}
