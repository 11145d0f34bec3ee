use serde::Serialize;

use crate::cli::{Record, SuiteContext};
use crate::covering::{
    calibrate_mu_constant, cover_level_set, intrinsic_maximal, mu_threshold, rescale_to_unit, unit_cylinder, unit_energy_field, unit_grid,
    CoveringConfig, CoveringResult, MaximalField, MuCalibration, MuThreshold, ProfileFamily, UnitScaling,
};
use crate::error::Result;
use crate::geometry::GeometryConstants;
use crate::grid::{point, FieldIntegrator, ScalarField, SpaceTimeGrid};
use crate::reduce::relative_change;
use crate::solver::Barenblatt;

const COVERING: &str = "covering";
/// s-grid of the concentrated field: fine enough to resolve the bump width.
const BUMP_S_RATIO: f64 = 1.189_207_115_002_721;
const BUMP_S_LEVELS: usize = 80;

/// λ-sweep of level-set coverings on one unit field.
#[derive(Debug, Clone, Serialize)]
pub struct CoveringSweep {
    pub field: String,
    pub scaling: Option<UnitScaling>,
    pub calibration: MuCalibration,
    pub mu: MuThreshold,
    /// max of M(F) over nodes of Q_{a,a}.
    pub top: f64,
    pub levels: Vec<CoveringResult>,
}

impl CoveringSweep {
    pub fn level_set_nodes(&self) -> usize {
        self.levels.iter().map(|r| r.level_set_nodes).sum()
    }
}

fn max_on_core(mx: &MaximalField, grid: &SpaceTimeGrid, a: f64) -> f64 {
    let qa = unit_cylinder(grid.n, a);
    let ns = grid.space_nodes();
    (0..grid.node_count()).filter(|&k| qa.contains(grid.n, &grid.node_point(k % ns), grid.time(k / ns))).map(|k| mx.values[k]).fold(0.0, f64::max)
}

/// Coverings of {M > λ} ∩ Q_{a,a} for the given λ values.
fn sweep(
    name: &str,
    u: &ScalarField,
    f: &ScalarField,
    scaling: Option<UnitScaling>,
    ctx: &SuiteContext,
    consts: &GeometryConstants,
    lambdas: impl Fn(f64, f64) -> Vec<f64>,
) -> Result<CoveringSweep> {
    let c = &ctx.manifest.covering;
    let grid = u.grid;
    let mut cfg = CoveringConfig::new(consts, c.gamma_1, c.c_1, c.delta_tilde)?;
    cfg.lattice_stride = c.lattice_stride;
    cfg.box_mode = c.box_mode;
    let cfg = &cfg;
    let fam = ProfileFamily::build(u, consts, c.lattice_stride)?;
    let energy = unit_energy_field(u, consts.m);
    let means = fam.means_of(&FieldIntegrator::new(&energy))?;
    let mx = intrinsic_maximal(&fam, &means);
    let calibration = calibrate_mu_constant(&[(c.a, c.b)], u, f, &fam, &means, cfg)?;
    let mu = mu_threshold(c.a, c.b, u, f, &fam, calibration.constant)?;
    let top = max_on_core(&mx, &grid, c.a);
    let levels = lambdas(mu.mu, top)
        .into_iter()
        .map(|lambda| cover_level_set(&energy, u, f, &fam, &means, &mx, lambda, c.a, c.b, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoveringSweep { field: name.to_string(), scaling, calibration, mu, top, levels })
}

/// Rescaled Barenblatt solution with λ_j = μ_{a,b} q^j, j = 1, …, J.
pub fn sweep_barenblatt(ctx: &SuiteContext) -> Result<CoveringSweep> {
    let man = ctx.manifest;
    let c = &man.covering;
    let n = c.dim;
    let params = man.params_in(n)?;
    let consts = man.unit_constants(n)?;
    let xc = point(&c.center[..n]);
    let tc = c.center[n];
    let half_t = 2.0 * c.theta_o * c.radius * c.radius;
    let reach = 2.0 * c.radius + xc[..n].iter().fold(0.0f64, |a, v| a.max(v.abs())) + 0.01;
    let cells = if n == 1 { 2048 } else { 128 };
    let original = SpaceTimeGrid::cube(n, reach, cells, (tc - half_t, tc + half_t), 512)?;
    let u0 = Barenblatt::new(&params, man.model.barenblatt_c)?.sample(&original)?;
    let k = ctx.refine();
    let unit = unit_grid(n, c.unit_cells * k, c.unit_steps * k)?;
    let pair = rescale_to_unit(&u0, None, params.m, &xc, tc, c.radius, c.theta_o, c.k_bound, &unit)?;
    let (levels, ratio) = (c.sweep_levels, c.sweep_ratio);
    sweep("barenblatt", &pair.u, &pair.f, Some(pair.scaling), ctx, &consts, |mu, _| (1..=levels).map(|j| mu * ratio.powi(j as i32)).collect())
}

/// Travelling narrow bump on the unit grid with λ spread geometrically between μ_{a,b} and max M.
fn sweep_concentrated(ctx: &SuiteContext) -> Result<CoveringSweep> {
    let man = ctx.manifest;
    let c = &man.covering;
    let n = c.dim;
    let consts = man.unit_constants(n)?.with_s_grid(BUMP_S_RATIO, BUMP_S_LEVELS)?;
    let k = ctx.refine();
    let unit = unit_grid(n, 256 * k, 64 * k)?;
    let u = ScalarField::from_fn(unit, "bump", |x, t| 1.0 + 0.5 * (-((x[0] - 0.1 * t).powi(2) + x[1..n].iter().map(|v| v * v).sum::<f64>()) / 0.002).exp());
    let f = ScalarField::zeros(unit, "f");
    let levels = c.sweep_levels;
    sweep("concentrated", &u, &f, None, ctx, &consts, |mu, top| {
        if !(top > mu) {
            return Vec::new();
        }
        (1..=levels).map(|j| mu * (top / mu).powf(j as f64 / (levels + 1) as f64)).collect()
    })
}

#[derive(Serialize)]
struct LevelSummary {
    lambda: f64,
    level_set_nodes: usize,
    selected: usize,
    case_histogram: [usize; 3],
    disjoint: bool,
    uncovered_level_nodes: usize,
    mean_bound_violations: usize,
    ancestor_violations: usize,
    absorption_failures: usize,
    case3_count: usize,
    covering_constant: f64,
    max_reverse_holder: f64,
}

/// Records of one sweep: properties per λ, the reverse Hölder constant of the stopping cylinders and its spread over λ.
pub fn covering_records(sw: &CoveringSweep, tol: f64, spread_tol: f64) -> Vec<Record> {
    let mut out = Vec::new();
    let tag = sw.field.as_str();
    out.push(Record::new(COVERING, "mu", tag, sw.mu.mu, f64::INFINITY, sw.mu.mu.is_finite()).with_detail(&sw.calibration));
    out.push(Record::new(COVERING, "level_set_nodes", tag, sw.level_set_nodes() as f64, f64::INFINITY, true).with_detail(&sw.top));
    let mut constants = Vec::new();
    for (j, r) in sw.levels.iter().enumerate() {
        let key = format!("{tag},lambda{j}");
        let d = LevelSummary {
            lambda: r.lambda,
            level_set_nodes: r.level_set_nodes,
            selected: r.selected.len(),
            case_histogram: r.case_histogram,
            disjoint: r.vitali.disjoint,
            uncovered_level_nodes: r.uncovered_level_nodes,
            mean_bound_violations: r.mean_bound_violations,
            ancestor_violations: r.ancestor_violations,
            absorption_failures: r.absorption_failures,
            case3_count: r.case3_count,
            covering_constant: r.covering_constant,
            max_reverse_holder: r.max_reverse_holder,
        };
        let violations = (r.uncovered_level_nodes + r.mean_bound_violations + r.ancestor_violations) as f64
            + if r.vitali.disjoint { 0.0 } else { 1.0 };
        out.push(Record::at_most(COVERING, "properties", key.clone(), violations, 0.0).with_detail(&d));
        out.push(Record::at_most(COVERING, "case3_absorption_failures", key.clone(), r.absorption_failures as f64, 0.0));
        if r.level_set_nodes > 0 {
            constants.push(r.max_reverse_holder);
            out.push(Record::new(COVERING, "covering_constant", key.clone(), r.covering_constant, f64::INFINITY, r.covering_constant.is_finite()));
            out.push(Record::at_most(COVERING, "reverse_holder", key, r.max_reverse_holder, tol).tracked());
        }
    }
    if !constants.is_empty() {
        let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = constants.iter().copied().fold(0.0, f64::max);
        out.push(Record::at_most(COVERING, "reverse_holder_lambda_spread", tag, relative_change(hi, lo), spread_tol));
    }
    out
}

/// Rescaled Barenblatt sweep plus the sweep on a concentrated field.
pub fn covering_suite(ctx: &SuiteContext) -> Result<Vec<Record>> {
    let (tol, spread) = (ctx.tol("covering.constant"), ctx.tol("covering.lambda_stability"));
    let mut out = covering_records(&sweep_barenblatt(ctx)?, tol, spread);
    out.extend(covering_records(&sweep_concentrated(ctx)?, tol, spread));
    Ok(out)
}
