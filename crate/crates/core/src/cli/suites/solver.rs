use std::sync::Arc;

use serde::Serialize;

use crate::cli::{Record, SuiteContext};
use crate::error::Result;
use crate::geometry::{build_profile, tilde_r, GeometryConstants};
use crate::grid::{point, FieldIntegrator, ScalarField, SpaceTimeGrid};
use crate::reduce::pairwise_sum;
use crate::solver::{solve, Barenblatt, Boundary, Solution, StructureField};

const SUITE_SOLVER: &str = "solver";
const SUITE_CONSTRUCTION: &str = "construction";

/// Computed and exact Barenblatt trajectories on one grid.
pub struct BarenblattRun {
    pub grid: SpaceTimeGrid,
    pub solution: Solution,
    pub exact: ScalarField,
    /// ‖u_h − u‖_{L¹} / ‖u‖_{L¹} at the final time.
    pub relative_l1: f64,
}

/// Solves from the exact initial slice with the exact Dirichlet trace.
pub fn barenblatt_run(ctx: &SuiteContext, level: usize) -> Result<BarenblattRun> {
    let m = ctx.manifest;
    let params = m.params()?;
    let grid = m.grid_at(level)?;
    let b = Barenblatt::new(&params, m.model.barenblatt_c)?;
    let exact = b.sample(&grid)?;
    let cfg = crate::solver::SolverConfig { boundary: Boundary::Trace(Arc::new(move |x, t| b.value(x, t))), ..m.solver_config() };
    let solution = solve(&params, &grid, exact.slice(0), None, &StructureField::identity(), &cfg)?;
    let last = grid.steps;
    let diff: Vec<f64> = solution.field.slice(last).iter().zip(exact.slice(last)).map(|(a, b)| (a - b).abs()).collect();
    let relative_l1 = pairwise_sum(&diff) / pairwise_sum(exact.slice(last));
    Ok(BarenblattRun { grid, solution, exact, relative_l1 })
}

#[derive(Serialize)]
struct LevelError {
    cells: usize,
    steps: usize,
    h: f64,
    dt: f64,
    relative_l1: f64,
    clamp_count: usize,
}

/// Relative L¹ errors at three simultaneous refinements and the observed orders.
pub fn solver_suite(ctx: &SuiteContext) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for k in 0..3 {
        let run = barenblatt_run(ctx, ctx.level + k)?;
        let e = run.relative_l1;
        errors.push(e);
        let d = LevelError {
            cells: run.grid.cells[0],
            steps: run.grid.steps,
            h: run.grid.h,
            dt: run.grid.dt,
            relative_l1: e,
            clamp_count: run.solution.stats.clamp_count,
        };
        out.push(Record::new(SUITE_SOLVER, "l1_error", format!("refinement{k}"), e, f64::INFINITY, e.is_finite()).with_detail(&d));
    }
    let order_min = ctx.tol("solver.order_min");
    for k in 0..2 {
        let order = (errors[k] / errors[k + 1]).log2();
        out.push(Record::new(SUITE_SOLVER, "observed_order", format!("refinement{k}-{}", k + 1), order, order_min, order >= order_min));
    }
    out.push(Record::at_most(SUITE_SOLVER, "final_error", "refinement2", errors[2], ctx.tol("solver.final_error")));
    Ok(out)
}

/// r̃(s) = min(R, √s) and θ_s = 1 for f ≡ 1.
pub fn construction_suite(ctx: &SuiteContext) -> Result<Vec<Record>> {
    let m = ctx.manifest;
    let n = m.model.n;
    let k = ctx.refine();
    let grid = SpaceTimeGrid::cube(n, 2.0, 32 * k, (0.0, 4.0), 16 * k)?;
    let fi = FieldIntegrator::new(&ScalarField::constant(grid, 1.0, "f"));
    let params = m.params()?;
    let consts = GeometryConstants::new(&params, m.geometry.b_hat, 1.0, 1.0, m.geometry.k_intr)?
        .with_s_grid(m.geometry.s_ratio, m.geometry.s_levels)?;
    let center = point(&vec![0.0; n]);
    let cells = ctx.tol("construction.cells");
    let mut out = Vec::new();
    for j in 0..20 {
        let s = 0.01 * (200f64).powf(j as f64 / 19.0);
        let r = tilde_r(&fi, params.p, &center, 2.0, s, 1.0).value;
        let expect = s.sqrt().min(1.0);
        let dev = (r - expect).abs() / grid.h;
        out.push(Record::at_most(SUITE_CONSTRUCTION, "tilde_r_cells", format!("s={s:.6}"), dev, cells));
    }
    let prof = build_profile(&fi, &center, 2.0, &consts)?;
    let tol = ctx.tol("construction.theta");
    let dev = prof
        .s
        .iter()
        .zip(&prof.theta)
        .filter(|(s, _)| s.sqrt() <= consts.r_max)
        .map(|(_, th)| (th - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(Record::at_most(SUITE_CONSTRUCTION, "theta_unit", "profile", dev, tol));
    Ok(out)
}
