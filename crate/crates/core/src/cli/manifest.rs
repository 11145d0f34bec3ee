use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::covering::{BoxMode, CoveringConfig};
use crate::error::{Error, Result};
use crate::geometry::{GeometryConstants, DEFAULT_S_RATIO};
use crate::grid::{ModelParams, SpaceTimeGrid};
use crate::solver::{Scheme, SolverConfig};

/// Manifest schema understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Every suite known to `verify`, in execution order.
pub const SUITES: [&str; 11] =
    ["solver", "construction", "scaling_profile", "engulf", "vitali", "maximal", "energy", "sup", "regime", "covering", "probe"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Profile,
    Cover,
    Verify,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub n: usize,
    pub m: f64,
    pub nu: f64,
    pub l_up: f64,
    /// Constant C of the Barenblatt solution.
    pub barenblatt_c: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { n: 2, m: 0.5, nu: 1.0, l_up: 1.0, barenblatt_c: 1.0 }
    }
}

/// Base grid of the Barenblatt run; level k multiplies cells and steps by 2^k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub half_width: f64,
    pub cells: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { half_width: 2.0, cells: 16, t_start: 1.0, t_end: 1.5, steps: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub scheme: Scheme,
    pub u_floor: Option<f64>,
    pub cfl_safety: f64,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            scheme: d.scheme,
            u_floor: d.u_floor,
            cfl_safety: d.cfl_safety,
            linear_tol: d.linear_tol,
            linear_max_iter: d.linear_max_iter,
            picard_tol: d.picard_tol,
            picard_max_iter: d.picard_max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub b_hat: f64,
    pub s_max: f64,
    pub r_max: f64,
    pub k_intr: f64,
    pub s_ratio: f64,
    pub s_levels: usize,
    /// Base points (x₁, …, x_n, t) of `profile`; empty selects the domain center.
    pub points: Vec<Vec<f64>>,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection { b_hat: 0.25, s_max: 0.25, r_max: 0.5, k_intr: 4.0, s_ratio: DEFAULT_S_RATIO, s_levels: 48, points: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoveringSection {
    /// Space dimension of the rescaled run.
    pub dim: usize,
    pub gamma_1: f64,
    pub c_1: f64,
    pub delta_tilde: f64,
    pub lattice_stride: usize,
    pub box_mode: BoxMode,
    pub a: f64,
    pub b: f64,
    /// Number of λ levels above μ_{a,b}.
    pub sweep_levels: usize,
    /// Ratio between consecutive λ levels.
    pub sweep_ratio: f64,
    pub unit_cells: usize,
    pub unit_steps: usize,
    /// Rescaling center (x₁, …, x_n, t), radius R and θ_o in original coordinates.
    pub center: Vec<f64>,
    pub radius: f64,
    pub theta_o: f64,
    /// Sub-intrinsic bound K of the rescaled ambient cylinder.
    pub k_bound: f64,
}

impl Default for CoveringSection {
    fn default() -> Self {
        CoveringSection {
            dim: 1,
            gamma_1: 0.26,
            c_1: 9.0,
            delta_tilde: 0.25,
            lattice_stride: 1,
            box_mode: BoxMode::Dyadic,
            a: 0.5,
            b: 1.0,
            sweep_levels: 8,
            sweep_ratio: 1.25,
            unit_cells: 128,
            unit_steps: 64,
            center: vec![0.577, 1.0],
            radius: 0.3,
            theta_o: 1.0,
            k_bound: 4.0,
        }
    }
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub covering: CoveringSection,
    /// Overrides of named tolerances.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

fn default_levels() -> usize {
    2
}

/// Named tolerances and their defaults.
pub const DEFAULT_TOLERANCES: [(&str, f64); 21] = [
    ("solver.order_min", 0.9),
    ("solver.final_error", 0.02),
    ("construction.cells", 1.0),
    ("construction.theta", 0.02),
    ("scaling_profile.relative", 1e-6),
    ("scaling_profile.stability", 0.25),
    ("engulf.c1_bound", 32.0),
    ("vitali.stability", 0.3),
    ("maximal.relative", 1e-10),
    ("energy.constant", 1e3),
    ("sup.constant", 1e3),
    ("regime.constant", 1e3),
    ("regime.switch_stability", 0.5),
    ("covering.constant", 1e3),
    ("covering.lambda_stability", 0.25),
    ("probe.change", 0.2),
    ("refine.stability", 0.25),
    ("elementary.constant", 1e3),
    ("sup.min_cylinders", 20.0),
    ("regime.time_pairs", 50.0),
    ("scaling_profile.random_fields", 50.0),
];

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command: None,
            seed: 0,
            suites: Vec::new(),
            levels: default_levels(),
            out_dir: None,
            model: ModelSection::default(),
            grid: GridSection::default(),
            solver: SolverSection::default(),
            geometry: GeometrySection::default(),
            covering: CoveringSection::default(),
            tolerances: BTreeMap::new(),
        }
    }
}

/// 1-based line of `key = ` inside `[section]` (top level for an empty section).
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let l = line.trim();
        if l.starts_with('[') {
            current = l.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = l.split_once('=') {
                if k.trim().trim_matches('"') == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

impl RunManifest {
    pub fn from_toml(src: &str) -> Result<Self> {
        let m: RunManifest = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        m.validate_with_source(Some(src))?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        RunManifest::from_toml(&src).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_source(None)
    }

    fn validate_with_source(&self, src: Option<&str>) -> Result<()> {
        let fail = |section: &str, key: &str, msg: String| -> Error {
            let at = src.and_then(|s| locate(s, section, key)).map(|l| format!("line {l}: ")).unwrap_or_default();
            let name = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            Error::Config(format!("{at}{name}: {msg}"))
        };
        if self.schema_version != SCHEMA_VERSION {
            return Err(fail("", "schema_version", format!("expected {SCHEMA_VERSION}, found {}", self.schema_version)));
        }
        for s in &self.suites {
            if !SUITES.contains(&s.as_str()) {
                return Err(fail("", "suites", format!("unknown suite '{s}', expected one of {SUITES:?}")));
            }
        }
        if !(1..=4).contains(&self.levels) {
            return Err(fail("", "levels", format!("{} must lie in 1..=4", self.levels)));
        }
        self.params().map_err(|e| fail("model", "m", e.to_string()))?;
        let g = &self.grid;
        if !(g.half_width > 0.0 && g.cells >= 2 && g.steps >= 1 && g.t_start > 0.0 && g.t_end > g.t_start) {
            return Err(fail("grid", "cells", "need half_width > 0, cells >= 2, steps >= 1 and 0 < t_start < t_end".into()));
        }
        if !(self.model.barenblatt_c > 0.0) {
            return Err(fail("model", "barenblatt_c", "must be positive".into()));
        }
        self.solver_config().validate().map_err(|e| fail("solver", "cfl_safety", e.to_string()))?;
        self.geometry_constants(self.model.n).map_err(|e| fail("geometry", "b_hat", e.to_string()))?;
        for p in &self.geometry.points {
            if p.len() != self.model.n + 1 {
                return Err(fail("geometry", "points", format!("point {p:?} needs {} coordinates", self.model.n + 1)));
            }
        }
        let c = &self.covering;
        if !(0.5 <= c.a && c.a < c.b && c.b <= 1.0) {
            return Err(fail("covering", "a", format!("need 1/2 <= a < b <= 1, got a = {}, b = {}", c.a, c.b)));
        }
        if !(c.sweep_ratio > 1.0) || c.sweep_levels == 0 {
            return Err(fail("covering", "sweep_ratio", "need sweep_ratio > 1 and sweep_levels >= 1".into()));
        }
        if c.unit_cells < 4 || c.unit_steps < 2 || c.lattice_stride == 0 {
            return Err(fail("covering", "unit_cells", "need unit_cells >= 4, unit_steps >= 2, lattice_stride >= 1".into()));
        }
        if !(1..=crate::grid::MAX_DIM).contains(&c.dim) {
            return Err(fail("covering", "dim", format!("{} must lie in 1..={}", c.dim, crate::grid::MAX_DIM)));
        }
        if c.center.len() != c.dim + 1 || !(c.radius > 0.0 && c.theta_o > 0.0 && c.k_bound >= 1.0) {
            return Err(fail("covering", "center", "need n + 1 center coordinates, radius > 0, theta_o > 0, k_bound >= 1".into()));
        }
        self.covering_config(c.dim).map_err(|e| fail("covering", "gamma_1", e.to_string()))?;
        for (k, v) in &self.tolerances {
            if !DEFAULT_TOLERANCES.iter().any(|(d, _)| d == k) {
                return Err(fail("tolerances", k, "unknown tolerance name".into()));
            }
            if !(*v >= 0.0) {
                return Err(fail("tolerances", k, format!("{v} must be nonnegative")));
            }
        }
        Ok(())
    }

    /// Suites to run: the explicit list in canonical order.
    pub fn selected_suites(&self) -> Vec<&'static str> {
        SUITES.iter().copied().filter(|s| self.suites.iter().any(|x| x == s)).collect()
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        if let Some(v) = self.tolerances.get(name) {
            return *v;
        }
        DEFAULT_TOLERANCES.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).expect("tolerance name is registered")
    }

    pub fn params(&self) -> Result<ModelParams> {
        self.params_in(self.model.n)
    }

    /// Model parameters with the manifest's m in dimension `n`.
    pub fn params_in(&self, n: usize) -> Result<ModelParams> {
        ModelParams::with_ellipticity(n, self.model.m, self.model.nu, self.model.l_up)
    }

    /// Barenblatt grid at refinement level k.
    pub fn grid_at(&self, level: usize) -> Result<SpaceTimeGrid> {
        let f = 1usize << level;
        let g = &self.grid;
        SpaceTimeGrid::cube(self.model.n, g.half_width, g.cells * f, (g.t_start, g.t_end), g.steps * f)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            scheme: s.scheme,
            u_floor: s.u_floor,
            cfl_safety: s.cfl_safety,
            linear_tol: s.linear_tol,
            linear_max_iter: s.linear_max_iter,
            picard_tol: s.picard_tol,
            picard_max_iter: s.picard_max_iter,
            ..SolverConfig::default()
        }
    }

    pub fn geometry_constants(&self, n: usize) -> Result<GeometryConstants> {
        let g = &self.geometry;
        GeometryConstants::new(&self.params_in(n)?, g.b_hat, g.s_max, g.r_max, g.k_intr)?.with_s_grid(g.s_ratio, g.s_levels)
    }

    /// Covering constants on the unit family (S = R = 1).
    pub fn covering_config(&self, n: usize) -> Result<CoveringConfig> {
        let c = &self.covering;
        let mut cfg = CoveringConfig::new(&self.unit_constants(n)?, c.gamma_1, c.c_1, c.delta_tilde)?;
        cfg.lattice_stride = c.lattice_stride;
        cfg.box_mode = c.box_mode;
        Ok(cfg)
    }

    /// Geometry constants of the unit family: S = R = 1 on the manifest s-grid ratio.
    pub fn unit_constants(&self, n: usize) -> Result<GeometryConstants> {
        let g = &self.geometry;
        GeometryConstants::new(&self.params_in(n)?, g.b_hat, 1.0, 1.0, g.k_intr)?.with_s_grid(g.s_ratio, g.s_levels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let m = RunManifest::default();
        let text = m.to_toml().unwrap();
        let back = RunManifest::from_toml(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn minimal_manifest_uses_defaults() {
        let m = RunManifest::from_toml("schema_version = 1\n").unwrap();
        assert!(m.selected_suites().is_empty());
        assert_eq!(m.tolerance("probe.change"), 0.2);
    }

    #[test]
    fn errors_name_the_line() {
        let src = "schema_version = 1\nseed = 3\n\n[model]\nn = 2\nm = 1.5\n";
        let err = RunManifest::from_toml(src).unwrap_err().to_string();
        assert!(err.contains("line 6") && err.contains("model.m"), "{err}");
        let err = RunManifest::from_toml("schema_version = 1\nsuites = [\"nope\"]\n").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("nope"), "{err}");
        let err = RunManifest::from_toml("schema_version = 1\n[grid]\ncellz = 3\n").unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("cellz"), "{err}");
        let err = RunManifest::from_toml("schema_version = 2\n").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn suites_follow_canonical_order() {
        let m = RunManifest { suites: vec!["probe".into(), "solver".into()], ..Default::default() };
        assert_eq!(m.selected_suites(), vec!["solver", "probe"]);
    }
}
