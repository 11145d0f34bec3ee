//! Runs two verification suites through the report layer and prints the
//! summary table.

use fdlab::cli::{cmd_verify, RunManifest};

fn main() -> fdlab::Result<()> {
    let mut manifest = RunManifest::default();
    manifest.suites = vec!["construction".into(), "vitali".into()];
    manifest.levels = 1;
    let out = std::env::temp_dir().join("fdlab-verify-example");
    let outcome = cmd_verify(&manifest, &out)?;
    print!("{}", std::fs::read_to_string(out.join("summary.csv")).map_err(|e| fdlab::Error::Io(e.to_string()))?);
    println!("pass {} ({} records) in {}", outcome.pass, outcome.records, out.display());
    Ok(())
}
