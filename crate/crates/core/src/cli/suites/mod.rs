//! Verification suites: each returns the records of one family of checks.

mod covering;
mod estimates;
mod geometry;
mod solver;

use crate::cli::{Record, SuiteContext};
use crate::error::Result;

pub use covering::{covering_records, sweep_barenblatt, CoveringSweep};
pub use solver::{barenblatt_run, BarenblattRun};

/// Runs one suite; a library error becomes a single failing record.
pub fn run_suite(name: &'static str, ctx: &SuiteContext) -> Vec<Record> {
    let out: Result<Vec<Record>> = match name {
        "solver" => solver::solver_suite(ctx),
        "construction" => solver::construction_suite(ctx),
        "scaling_profile" => geometry::scaling_profile_suite(ctx),
        "engulf" => geometry::engulf_suite(ctx),
        "vitali" => geometry::vitali_suite(ctx),
        "maximal" => geometry::maximal_suite(ctx),
        "energy" => estimates::energy_suite(ctx),
        "sup" => estimates::sup_suite(ctx),
        "regime" => estimates::regime_suite(ctx),
        "covering" => covering::covering_suite(ctx),
        "probe" => estimates::probe_suite(ctx),
        other => Err(crate::Error::Config(format!("unknown suite '{other}'"))),
    };
    let mut records = match out {
        Ok(r) => r,
        Err(e) => vec![Record::new(name, "error", e.to_string(), f64::NAN, 0.0, false)],
    };
    for r in &mut records {
        r.level = ctx.level;
    }
    records
}
