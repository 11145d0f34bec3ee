use rand::Rng;
use serde::Serialize;

use crate::cli::{Record, SuiteContext};
use crate::covering::{
    box_maximal, box_maximal_brute, check_cover, intrinsic_maximal, intrinsic_maximal_brute, parabolic_item, unit_grid, vitali_select,
    BoxMode, ProfileFamily, PARABOLIC_C1,
};
use crate::error::{Error, Result};
use crate::geometry::{build_profile, gamma_range, two_point_engulfing, verify_profile, GeometryConstants, ScalingProfile, DEFAULT_SLACK};
use crate::grid::{point, FieldIntegrator, Point, ScalarField, SpaceTimeGrid, MAX_DIM};
use crate::reduce::{median, relative_change};
use crate::solver::Barenblatt;

const SCALING_PROFILE: &str = "scaling_profile";
const ENGULF: &str = "engulf";
const VITALI: &str = "vitali";
const MAXIMAL: &str = "maximal";

/// Largest γ step of the scale bounds on the base s-grid.
const GAMMA_STEPS: usize = 8;

fn random_point<R: Rng>(rng: &mut R, n: usize, half: f64) -> Point {
    let mut x = [0.0; MAX_DIM];
    for v in x.iter_mut().take(n) {
        *v = rng.gen_range(-half..half);
    }
    x
}

/// Nonnegative field: a few Gaussian bumps over a positive floor plus nodal noise.
fn random_field<R: Rng>(rng: &mut R, grid: SpaceTimeGrid) -> ScalarField {
    let n = grid.n;
    let bumps: Vec<(Point, f64, f64, f64)> = (0..4)
        .map(|_| (random_point(rng, n, 1.0), rng.gen_range(grid.t_start..grid.t_end), rng.gen_range(0.5..4.0), rng.gen_range(0.05..0.5)))
        .collect();
    let floor = rng.gen_range(0.05..1.0);
    let noise: Vec<f64> = (0..grid.node_count()).map(|_| rng.gen_range(0.0..0.2)).collect();
    let mut f = ScalarField::from_fn(grid, "f_random", |x, t| {
        floor
            + bumps
                .iter()
                .map(|(c, tc, a, w)| {
                    let d2: f64 = (0..n).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>() + (t - tc).powi(2);
                    a * (-d2 / (w * w)).exp()
                })
                .sum::<f64>()
    });
    for (v, e) in f.values.iter_mut().zip(&noise) {
        *v += e;
    }
    f.nonnegative = true;
    f
}

fn barenblatt_power(ctx: &SuiteContext, grid: SpaceTimeGrid) -> Result<ScalarField> {
    let m = ctx.manifest;
    let params = m.params_in(grid.n)?;
    let u = Barenblatt::new(&params, m.model.barenblatt_c)?.sample(&grid)?;
    let mut up = u.map("u_power", |v| v.max(0.0).powf(params.m + 1.0));
    up.nonnegative = true;
    Ok(up)
}

#[derive(Serialize)]
struct RefinedSlack {
    ratios: Vec<f64>,
    f_slack_max: Vec<f64>,
    changes: Vec<f64>,
}

/// Nested-family properties on random fields and on u^{m+1} of the Barenblatt solution.
pub fn scaling_profile_suite(ctx: &SuiteContext) -> Result<Vec<Record>> {
    let m = ctx.manifest;
    let n = m.model.n;
    let k = ctx.refine();
    let grid = SpaceTimeGrid::cube(n, 2.0, 32 * k, (1.0, 3.0), 16 * k)?;
    let base = m.geometry_constants(n)?;
    let grids: Vec<GeometryConstants> = (0..3)
        .map(|j| base.with_s_grid(base.s_ratio.powf(0.5f64.powi(j)), base.s_levels << j))
        .collect::<Result<_>>()?;
    let count = ctx.tol("scaling_profile.random_fields") as usize;
    let mut rng = ctx.rng(SCALING_PROFILE, 0);
    let mut cases: Vec<(String, ScalarField, Point, f64)> = Vec::new();
    for i in 0..count {
        let f = random_field(&mut rng, grid);
        let z = random_point(&mut rng, n, 0.5);
        let t0 = rng.gen_range(1.8..2.2);
        cases.push((format!("random{i}"), f, z, t0));
    }
    cases.push(("barenblatt".into(), barenblatt_power(ctx, grid)?, point(&vec![0.3; n]), 2.0));
    let rel = ctx.tol("scaling_profile.relative");
    let stab = ctx.tol("scaling_profile.stability");
    let mut out = Vec::new();
    for (key, f, z, t0) in &cases {
        let fi = FieldIntegrator::new(f);
        let mut slack = Vec::new();
        for (j, c) in grids.iter().enumerate() {
            let prof = build_profile(&fi, z, *t0, c)?;
            let rep = verify_profile(&prof, &gamma_range(GAMMA_STEPS << j), DEFAULT_SLACK);
            slack.push(rep.f_slack.iter().copied().fold(0.0, f64::max));
            if j == 0 {
                let failing = [
                    rep.a_pass,
                    rep.b_violations == 0,
                    rep.c_max_excess <= rel,
                    rep.d_violations == 0,
                    rep.e_violations == 0,
                    rep.f_pass,
                    rep.g_pass,
                ]
                .iter()
                .filter(|ok| !**ok)
                .count();
                out.push(Record::at_most(SCALING_PROFILE, "properties_failing", key.clone(), failing as f64, 0.0).with_detail(&rep));
                out.push(Record::at_most(SCALING_PROFILE, "c_excess", key.clone(), rep.c_max_excess, rel));
            }
        }
        let changes: Vec<f64> = slack.windows(2).map(|w| relative_change(w[1], w[0])).collect();
        let worst = changes.iter().copied().fold(0.0, f64::max);
        let d = RefinedSlack { ratios: grids.iter().map(|c| c.s_ratio).collect(), f_slack_max: slack.clone(), changes };
        out.push(Record::at_most(SCALING_PROFILE, "f_slack_s_grid_change", key.clone(), worst, stab).with_detail(&d));
        out.push(Record::new(SCALING_PROFILE, "f_slack", key.clone(), slack[0], f64::INFINITY, slack[0].is_finite()).tracked());
    }
    Ok(out)
}

/// Whether every node of Q(s_i, a) lies in Q(s_j, b).
fn nodewise_included(grid: &SpaceTimeGrid, a: &ScalingProfile, i: usize, b: &ScalingProfile, j: usize) -> bool {
    let n = grid.n;
    let (qa, qb) = (a.cylinder(i), b.cylinder(j));
    let ns = grid.space_nodes();
    (0..grid.node_count()).all(|node| {
        let (x, t) = (grid.node_point(node % ns), grid.time(node / ns));
        !qa.contains(n, &x, t) || qb.contains(n, &x, t)
    })
}

#[derive(Serialize)]
struct EngulfCase {
    z: Point,
    t_z: f64,
    y: Point,
    t_y: f64,
    s: f64,
    c1: Option<f64>,
    nodewise: bool,
}

/// Two-point engulfing over random intersecting pairs of the Barenblatt u^{m+1} field.
pub fn engulf_suite(ctx: &SuiteContext) -> Result<Vec<Record>> {
    let m = ctx.manifest;
    let n = m.model.n;
    let k = ctx.refine();
    let grid = SpaceTimeGrid::cube(n, 2.0, 32 * k, (1.0, 3.0), 32 * k)?;
    let consts = m.geometry_constants(n)?;
    let fi = FieldIntegrator::new(&barenblatt_power(ctx, grid)?);
    let mut rng = ctx.rng(ENGULF, 0);
    let bound = ctx.tol("engulf.c1_bound");
    let mut out = Vec::new();
    let mut c1_max: f64 = 0.0;
    let mut pairs = 0;
    while pairs < 100 {
        let z = random_point(&mut rng, n, 0.8);
        let t_z = rng.gen_range(1.6..2.4);
        let mut y = z;
        for v in y.iter_mut().take(n) {
            *v = (*v + rng.gen_range(-0.3..0.3)).clamp(-0.9, 0.9);
        }
        let t_y = (t_z + rng.gen_range(-0.1f64..0.1)).clamp(1.55, 2.45);
        let pz = build_profile(&fi, &z, t_z, &consts)?;
        let py = build_profile(&fi, &y, t_y, &consts)?;
        let top = pz.s.iter().take_while(|&&s| s * bound <= consts.s_max * (1.0 + 1e-12)).count();
        if top == 0 {
            return Err(Error::ProfileMissing(consts.s_max / bound));
        }
        let i = rng.gen_range(0..top);
        let Some(i) = (i..top).find(|&i| pz.cylinder(i).intersects(n, &py.cylinder(i))) else { continue };
        let e = two_point_engulfing(&pz, &py, pz.s[i])?;
        let nodewise = match e.c1 {
            Some(c) => {
                let j = pz.index_of(c * pz.s[i])?;
                nodewise_included(&grid, &pz, i, &py, j) && nodewise_included(&grid, &py, i, &pz, j)
            }
            None => false,
        };
        let c1 = e.c1.unwrap_or(f64::INFINITY);
        c1_max = c1_max.max(c1);
        let d = EngulfCase { z, t_z, y, t_y, s: pz.s[i], c1: e.c1, nodewise };
        out.push(Record::new(ENGULF, "pair", format!("pair{pairs}"), c1, bound, e.c1.is_some() && nodewise).with_detail(&d));
        pairs += 1;
    }
    out.push(Record::at_most(ENGULF, "c1_max", "run", c1_max, bound));
    Ok(out)
}

/// Greedy Vitali selection on random parabolic cylinders over several seeds.
pub fn vitali_suite(ctx: &SuiteContext) -> Result<Vec<Record>> {
    let n = ctx.manifest.model.n;
    let k = ctx.refine();
    let grid = SpaceTimeGrid::cube(n, 2.0, 32 * k, (-2.0, 2.0), 32 * k)?;
    let mut out = Vec::new();
    let mut constants = Vec::new();
    for seed in 0..10u64 {
        let mut rng = ctx.rng(VITALI, seed);
        let items: Vec<_> = (0..200)
            .map(|_| {
                let c = random_point(&mut rng, n, 1.0);
                let t = rng.gen_range(-1.0..1.0);
                let s = (rng.gen_range(0.005f64.ln()..0.2f64.ln())).exp();
                parabolic_item(c, t, s, PARABOLIC_C1)
            })
            .collect();
        let sel = vitali_select(n, &items);
        let chk = check_cover(&grid, &items, &sel);
        constants.push(chk.constant);
        let ok = chk.disjoint && chk.uncovered_nodes == 0;
        out.push(Record::new(VITALI, "cover", format!("seed{seed}"), chk.constant, f64::INFINITY, ok).with_detail(&chk));
    }
    let med = median(&constants);
    let spread = constants.iter().map(|c| relative_change(*c, med)).fold(0.0, f64::max);
    out.push(Record::at_most(VITALI, "constant_spread", "seeds", spread, ctx.tol("vitali.stability")));
    Ok(out)
}

fn max_relative_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE)).filter(|v| v.is_finite()).fold(0.0, f64::max)
}

/// Fast maximal functions against brute-force enumeration on 8ⁿ × 16 grids.
pub fn maximal_suite(ctx: &SuiteContext) -> Result<Vec<Record>> {
    let m = ctx.manifest;
    let n = m.model.n;
    let grid = unit_grid(n, 8, 16)?;
    let consts = GeometryConstants::new(&m.params_in(n)?, m.geometry.b_hat, 1.0, 1.0, m.geometry.k_intr)?.with_s_grid(2f64.sqrt(), 40)?;
    let u = ScalarField::from_fn(grid, "u", |x, t| 1.0 + 0.3 * (x[0] - x[n - 1] + 0.5 * t).sin());
    let fam = ProfileFamily::build(&u, &consts, 1)?;
    let tol = ctx.tol("maximal.relative");
    let mut out = Vec::new();
    for seed in 0..3u64 {
        let mut rng = ctx.rng(MAXIMAL, seed);
        let vals: Vec<f64> = (0..grid.node_count()).map(|_| rng.gen::<f64>()).collect();
        let f = ScalarField::nonnegative(grid, vals, "f")?;
        let means = fam.means_of(&FieldIntegrator::new(&f))?;
        let gap = max_relative_gap(&intrinsic_maximal(&fam, &means).values, &intrinsic_maximal_brute(&f, &fam).values);
        out.push(Record::at_most(MAXIMAL, "intrinsic_vs_brute", format!("seed{seed}"), gap, tol));
        let gap = max_relative_gap(&box_maximal(&f, BoxMode::Exhaustive).values, &box_maximal_brute(&f, BoxMode::Exhaustive).values);
        out.push(Record::at_most(MAXIMAL, "box_vs_brute", format!("seed{seed}"), gap, tol));
    }
    Ok(out)
}
