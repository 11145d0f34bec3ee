use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cli::suites::{barenblatt_run, run_suite, sweep_barenblatt};
use crate::cli::{Command, Record, RunManifest, SuiteContext};
use crate::error::{Error, Result};
use crate::geometry::{build_profile, gamma_range, verify_profile, ProfileReport, DEFAULT_SLACK};
use crate::grid::snapshot::write_snapshot;
use crate::grid::{point, FieldIntegrator};
use crate::reduce::{relative_change, Spread};
use crate::solver::Barenblatt;

/// Verdict of one command: the process exits 0 iff `pass`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Outcome {
    pub pass: bool,
    /// Names of the failing reports, as `suite/check/key@level`.
    pub failing: Vec<String>,
    pub records: usize,
}

impl Outcome {
    fn from_records(records: &[Record]) -> Self {
        let failing: Vec<String> = records.iter().filter(|r| !r.pass).map(failing_name).collect();
        Outcome { pass: failing.is_empty(), failing, records: records.len() }
    }

    fn merge(&mut self, other: Outcome) {
        self.pass &= other.pass;
        self.failing.extend(other.failing);
        self.records += other.records;
    }
}

fn failing_name(r: &Record) -> String {
    format!("{}/{}/{}@{}", r.suite, r.check, r.key, r.level)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_manifest(manifest: &RunManifest, out: &Path) -> Result<()> {
    write(&out.join("manifest.toml"), &manifest.to_toml()?)
}

/// Records of every selected suite at one refinement level.
pub fn run_suites(manifest: &RunManifest, level: usize) -> Vec<Record> {
    let ctx = SuiteContext { manifest, level };
    manifest.selected_suites().into_iter().flat_map(|s| run_suite(s, &ctx)).collect()
}

/// `reports.jsonl` (one record per line) and `summary.csv`.
pub fn write_reports(records: &[Record], dir: &Path, stem: &str) -> Result<()> {
    let mut lines = String::new();
    for r in records {
        lines.push_str(&r.to_json_line());
        lines.push('\n');
    }
    write(&dir.join(format!("{stem}.jsonl")), &lines)?;
    write(&dir.join(format!("summary{}.csv", stem.strip_prefix("reports").unwrap_or(""))), &summary_csv(records))
}

/// Per suite and check: count, passes and the min/median/max of the values.
pub fn summary_csv(records: &[Record]) -> String {
    let mut groups: BTreeMap<(usize, &str, &str), Vec<&Record>> = BTreeMap::new();
    for r in records {
        groups.entry((r.level, r.suite, r.check.as_str())).or_default().push(r);
    }
    let mut s = String::from("level,suite,check,count,passed,min,median,max\n");
    for ((level, suite, check), rs) in groups {
        let values: Vec<f64> = rs.iter().map(|r| r.value).collect();
        let sp = Spread::of(&values);
        let passed = rs.iter().filter(|r| r.pass).count();
        s.push_str(&format!("{level},{suite},{check},{},{passed},{:e},{:e},{:e}\n", rs.len(), sp.min, sp.median, sp.max));
    }
    s
}

#[derive(Serialize)]
struct ConvergenceRow {
    level: usize,
    cells: usize,
    steps: usize,
    h: f64,
    dt: f64,
    relative_l1: f64,
    order: Option<f64>,
}

/// Barenblatt runs at levels 0..levels: snapshots and the convergence table.
pub fn cmd_solve(manifest: &RunManifest, out: &Path) -> Result<Outcome> {
    create_dir(out)?;
    write_manifest(manifest, out)?;
    let ctx = SuiteContext { manifest, level: 0 };
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for level in 0..manifest.levels {
        let run = barenblatt_run(&ctx, level)?;
        write_snapshot(&run.solution.field, &out.join(format!("u_level{level}.bin")), Some(&out.join(format!("u_level{level}.csv"))))?;
        write_snapshot(&run.exact, &out.join(format!("exact_level{level}.bin")), None)?;
        let order = rows.last().map(|p| (p.relative_l1 / run.relative_l1).log2());
        rows.push(ConvergenceRow {
            level,
            cells: run.grid.cells[0],
            steps: run.grid.steps,
            h: run.grid.h,
            dt: run.grid.dt,
            relative_l1: run.relative_l1,
            order,
        });
    }
    let mut csv = String::from("level,cells,steps,h,dt,relative_l1,order\n");
    for r in &rows {
        let order = r.order.map(|o| format!("{o:e}")).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{:e},{:e},{:e},{order}\n", r.level, r.cells, r.steps, r.h, r.dt, r.relative_l1));
    }
    write(&out.join("convergence.csv"), &csv)?;
    let tol = manifest.tolerance("solver.final_error");
    let last = rows.last().map(|r| r.relative_l1).unwrap_or(f64::NAN);
    let rec = Record::at_most("solve", "final_error", format!("level{}", manifest.levels - 1), last, tol);
    Ok(Outcome::from_records(&[rec]))
}

#[derive(Serialize)]
struct ProfileEntry {
    center: Vec<f64>,
    t0: f64,
    report: ProfileReport,
}

/// Scaling profiles of u^{m+1} on the Barenblatt field at the configured base points.
pub fn cmd_profile(manifest: &RunManifest, out: &Path) -> Result<Outcome> {
    create_dir(out)?;
    write_manifest(manifest, out)?;
    let n = manifest.model.n;
    let params = manifest.params()?;
    let grid = manifest.grid_at(manifest.levels - 1)?;
    let u = Barenblatt::new(&params, manifest.model.barenblatt_c)?.sample(&grid)?;
    let fi = FieldIntegrator::new(&u.map("u_power", |v| v.max(0.0).powf(params.m + 1.0)));
    let consts = manifest.geometry_constants(n)?;
    let points = if manifest.geometry.points.is_empty() {
        let mut p = vec![0.0; n];
        p.push(0.5 * (grid.t_start + grid.t_end));
        vec![p]
    } else {
        manifest.geometry.points.clone()
    };
    let mut entries = Vec::new();
    let mut records = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let prof = build_profile(&fi, &point(&p[..n]), p[n], &consts)?;
        write(&out.join(format!("profile{i}.csv")), &prof.to_csv())?;
        let report = verify_profile(&prof, &gamma_range(8), DEFAULT_SLACK);
        records.push(Record::new("profile", "properties", format!("point{i}"), report.f_slack[0], report.slack_bound, report.all_pass));
        entries.push(ProfileEntry { center: p[..n].to_vec(), t0: p[n], report });
    }
    write(&out.join("report.json"), &serde_json::to_string_pretty(&entries).map_err(|e| Error::Format(e.to_string()))?)?;
    Ok(Outcome::from_records(&records))
}

/// Coverings of the rescaled Barenblatt level sets over the configured λ sweep.
pub fn cmd_cover(manifest: &RunManifest, out: &Path) -> Result<Outcome> {
    create_dir(out)?;
    write_manifest(manifest, out)?;
    let ctx = SuiteContext { manifest, level: manifest.levels - 1 };
    let sw = sweep_barenblatt(&ctx)?;
    let mut csv = String::from("index,lambda,level_set_nodes,selected,covering_constant,max_reverse_holder,case1,case2,case3,absorption_failures,properties_hold\n");
    let mut records = Vec::new();
    for (j, r) in sw.levels.iter().enumerate() {
        write(&out.join(format!("lambda{j}.json")), &r.to_json())?;
        let h = r.case_histogram;
        csv.push_str(&format!(
            "{j},{:e},{},{},{:e},{:e},{},{},{},{},{}\n",
            r.lambda,
            r.level_set_nodes,
            r.selected.len(),
            r.covering_constant,
            r.max_reverse_holder,
            h[0],
            h[1],
            h[2],
            r.absorption_failures,
            r.properties_hold()
        ));
        let ok = r.properties_hold() && r.absorption_failures == 0;
        records.push(Record::new("cover", "properties", format!("lambda{j}"), r.lambda, f64::INFINITY, ok));
    }
    write(&out.join("sweep.csv"), &csv)?;
    let head = serde_json::json!({ "scaling": sw.scaling, "calibration": sw.calibration, "mu": sw.mu, "top": sw.top });
    write(&out.join("mu.json"), &serde_json::to_string_pretty(&head).map_err(|e| Error::Format(e.to_string()))?)?;
    Ok(Outcome::from_records(&records))
}

/// Every selected suite at the finest level, as JSON lines plus a summary table.
pub fn cmd_verify(manifest: &RunManifest, out: &Path) -> Result<Outcome> {
    create_dir(out)?;
    write_manifest(manifest, out)?;
    let records = run_suites(manifest, manifest.levels - 1);
    write_reports(&records, out, "reports")?;
    Ok(Outcome::from_records(&records))
}

/// Change of one tracked value between the two finest levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub suite: String,
    pub check: String,
    pub key: String,
    pub coarse: f64,
    pub fine: f64,
    pub change: f64,
    pub pass: bool,
}

/// Pairs tracked records with equal (suite, check, key) across two levels.
pub fn stability_table(coarse: &[Record], fine: &[Record], tol: f64) -> Vec<StabilityRow> {
    let index: BTreeMap<(&str, &str, &str), &Record> =
        coarse.iter().filter(|r| r.tracked).map(|r| ((r.suite, r.check.as_str(), r.key.as_str()), r)).collect();
    fine.iter()
        .filter(|r| r.tracked)
        .filter_map(|f| {
            let c = index.get(&(f.suite, f.check.as_str(), f.key.as_str()))?;
            let change = relative_change(c.value, f.value);
            Some(StabilityRow {
                suite: f.suite.to_string(),
                check: f.check.clone(),
                key: f.key.clone(),
                coarse: c.value,
                fine: f.value,
                change,
                pass: change < tol,
            })
        })
        .collect()
}

fn stability_csv(rows: &[StabilityRow]) -> String {
    let mut s = String::from("suite,check,key,coarse,fine,change,pass\n");
    for r in rows {
        s.push_str(&format!("{},{},\"{}\",{:e},{:e},{:e},{}\n", r.suite, r.check, r.key, r.coarse, r.fine, r.change, r.pass));
    }
    s
}

/// `verify` at levels 0..levels and the stability table of the two finest.
pub fn cmd_refine(manifest: &RunManifest, out: &Path) -> Result<Outcome> {
    create_dir(out)?;
    write_manifest(manifest, out)?;
    let mut per_level = Vec::new();
    let mut outcome = Outcome { pass: true, ..Default::default() };
    for level in 0..manifest.levels {
        let records = run_suites(manifest, level);
        write_reports(&records, out, &format!("reports_level{level}"))?;
        outcome.merge(Outcome::from_records(&records));
        per_level.push(records);
    }
    let rows = match per_level.len() {
        0 | 1 => Vec::new(),
        k => stability_table(&per_level[k - 2], &per_level[k - 1], manifest.tolerance("refine.stability")),
    };
    write(&out.join("stability.csv"), &stability_csv(&rows))?;
    for r in rows.iter().filter(|r| !r.pass) {
        outcome.pass = false;
        outcome.failing.push(format!("{}/{}/{}@stability", r.suite, r.check, r.key));
    }
    Ok(outcome)
}

/// Runs `command` with outputs under `out`.
pub fn run_command(command: Command, manifest: &RunManifest, out: &Path) -> Result<Outcome> {
    manifest.validate()?;
    match command {
        Command::Solve => cmd_solve(manifest, out),
        Command::Profile => cmd_profile(manifest, out),
        Command::Cover => cmd_cover(manifest, out),
        Command::Verify => cmd_verify(manifest, out),
        Command::Refine => cmd_refine(manifest, out),
    }
}

/// Output directory: the manifest value, else `FDLAB_OUT_DIR`, else `fdlab-out`.
pub fn default_out_dir(manifest: &RunManifest) -> PathBuf {
    manifest
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("FDLAB_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("fdlab-out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(check: &str, key: &str, value: f64, tracked: bool) -> Record {
        let r = Record::new("s", check, key, value, 1.0, true);
        if tracked {
            r.tracked()
        } else {
            r
        }
    }

    #[test]
    fn empty_selection_passes() {
        let dir = tempfile::tempdir().unwrap();
        let m = RunManifest::default();
        let o = cmd_verify(&m, dir.path()).unwrap();
        assert!(o.pass && o.records == 0);
        assert_eq!(fs::read_to_string(dir.path().join("reports.jsonl")).unwrap(), "");
        assert!(dir.path().join("manifest.toml").exists());
    }

    #[test]
    fn stability_pairs_tracked_keys() {
        let coarse = vec![rec("c", "a", 1.0, true), rec("c", "b", 1.0, true), rec("d", "a", 5.0, false)];
        let fine = vec![rec("c", "a", 1.1, true), rec("c", "b", 2.0, true), rec("d", "a", 9.0, false), rec("c", "z", 1.0, true)];
        let rows = stability_table(&coarse, &fine, 0.25);
        assert_eq!(rows.len(), 2);
        assert!(rows[0].pass && !rows[1].pass);
        assert!((rows[1].change - 0.5).abs() < 1e-15);
    }

    #[test]
    fn summary_groups_by_check() {
        let rs = vec![rec("c", "a", 1.0, false), rec("c", "b", 3.0, false), rec("d", "a", 2.0, false)];
        let csv = summary_csv(&rs);
        assert!(csv.contains("0,s,c,2,2,1e0,2e0,3e0"));
        assert!(csv.contains("0,s,d,1,1,2e0,2e0,2e0"));
    }
}
