//! Run manifests, verification suites and report emission behind the `fdlab` binary.

mod commands;
pub mod manifest;
mod record;
pub mod suites;

pub use commands::{
    cmd_cover, cmd_profile, cmd_refine, cmd_solve, cmd_verify, default_out_dir, run_command, run_suites, stability_table, summary_csv,
    write_reports, Outcome,
    StabilityRow,
};
pub use manifest::{Command, RunManifest, SCHEMA_VERSION, SUITES};
pub use record::{Record, SuiteContext};
