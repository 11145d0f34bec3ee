use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{pow_m, ModelParams, Point, ScalarField, SpaceTimeGrid};
use crate::reduce::{max_abs, pairwise_dot};
use crate::solver::StructureField;

/// Smallest floor used when the initial datum vanishes identically.
pub const MIN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

/// Dirichlet data on the boundary of the box.
#[derive(Clone)]
pub enum Boundary {
    /// Boundary nodes keep their initial values.
    Frozen,
    /// Boundary nodes follow g(x, t), typically an exact solution.
    Trace(Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Frozen => write!(f, "Frozen"),
            Boundary::Trace(_) => write!(f, "Trace"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Regularization floor; `None` selects 10⁻⁶‖u₀‖_∞.
    pub u_floor: Option<f64>,
    pub cfl_safety: f64,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub boundary: Boundary,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::SemiImplicit,
            u_floor: None,
            cfl_safety: 0.9,
            linear_tol: 1e-12,
            linear_max_iter: 20_000,
            picard_tol: 1e-10,
            picard_max_iter: 50,
            boundary: Boundary::Frozen,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(fl) = self.u_floor {
            if !(fl > 0.0) {
                return Err(Error::Config(format!("u_floor = {fl} must be positive")));
            }
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(Error::Config(format!("cfl_safety = {} must lie in (0, 1)", self.cfl_safety)));
        }
        if !(self.linear_tol > 0.0 && self.picard_tol > 0.0) || self.linear_max_iter == 0 || self.picard_max_iter == 0 {
            return Err(Error::Config("tolerances and iteration caps must be positive".into()));
        }
        Ok(())
    }

    /// Floor actually used for initial datum `u0`.
    pub fn floor_for(&self, u0: &[f64]) -> f64 {
        self.u_floor.unwrap_or_else(|| (1e-6 * max_abs(u0)).max(MIN_FLOOR))
    }
}

/// Diagnostics of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub t: f64,
    pub u_max: f64,
    pub u_min: f64,
    /// dt divided by the explicit stability bound at this step.
    pub cfl_ratio: f64,
    pub clamped: usize,
    pub picard_iterations: usize,
    pub linear_iterations: usize,
    pub picard_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub floor: f64,
    pub clamp_count: usize,
    pub clamp_fraction: f64,
    pub steps: Vec<StepStats>,
}

/// A computed trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub field: ScalarField,
    pub stats: SolveStats,
}

/// Largest stable explicit dt: h² / (2n L max_a m max(u_min, floor)^{m−1}).
pub fn explicit_dt_bound(params: &ModelParams, grid: &SpaceTimeGrid, u: &[f64], floor: f64) -> f64 {
    let u_min = u.iter().copied().fold(f64::INFINITY, f64::min);
    let diff = if params.m == 1.0 { 1.0 } else { params.m * u_min.max(floor).powf(params.m - 1.0) };
    grid.h * grid.h / (2.0 * grid.n as f64 * params.l_up * diff)
}

fn face_point(grid: &SpaceTimeGrid, s: usize, a: usize) -> Point {
    let mut x = grid.node_point(s);
    x[a] += 0.5 * grid.h;
    x
}

fn boundary_value(grid: &SpaceTimeGrid, bc: &Boundary, s: usize, t: f64, current: f64) -> f64 {
    match bc {
        Boundary::Frozen => current,
        Boundary::Trace(g) => g(&grid.node_point(s), t).max(0.0),
    }
}

/// Secant slope of v = w^m between max(a, floor) and max(b, floor).
#[inline]
fn secant(a: f64, b: f64, m: f64, floor: f64) -> f64 {
    if m == 1.0 {
        return 1.0;
    }
    let (a, b) = (a.max(floor), b.max(floor));
    if (a - b).abs() <= 1e-12 * a.max(b) {
        let c = 0.5 * (a + b);
        m * c.powf(m - 1.0)
    } else {
        (a.powf(m) - b.powf(m)) / (a - b)
    }
}

/// Result of [`step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub u_next: Vec<f64>,
    pub stats: StepStats,
}

/// Advances one slice from t to t + dt.
///
/// `f` is the source slice used by the scheme: at t for the explicit scheme
/// and at t + dt for the semi-implicit one.
#[allow(clippy::too_many_arguments)]
pub fn step(
    params: &ModelParams,
    grid: &SpaceTimeGrid,
    t: f64,
    u_now: &[f64],
    f: Option<&[f64]>,
    a: &StructureField,
    cfg: &SolverConfig,
    floor: f64,
    dt: f64,
) -> Result<StepOutcome> {
    let ns = grid.space_nodes();
    if u_now.len() != ns || f.is_some_and(|f| f.len() != ns) {
        return Err(Error::FieldMismatch("slice length differs from the spatial node count".into()));
    }
    let bound = explicit_dt_bound(params, grid, u_now, floor);
    let cfl_ratio = dt / (cfg.cfl_safety * bound);
    let t_next = t + dt;
    let (mut u_next, picard, linear, converged) = match cfg.scheme {
        Scheme::Explicit => {
            if cfl_ratio > 1.0 {
                return Err(Error::CflViolation { dt, bound: cfg.cfl_safety * bound });
            }
            (explicit_update(params, grid, t, u_now, f, a, cfg, dt), 0, 0, true)
        }
        Scheme::SemiImplicit => semi_implicit_update(params, grid, t_next, u_now, f, a, cfg, floor, dt)?,
    };
    let mut clamped = 0;
    for v in u_next.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clamped += 1;
        }
    }
    let u_max = u_next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let u_min = u_next.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(StepOutcome {
        u_next,
        stats: StepStats {
            t: t_next,
            u_max,
            u_min,
            cfl_ratio,
            clamped,
            picard_iterations: picard,
            linear_iterations: linear,
            picard_converged: converged,
        },
    })
}

#[allow(clippy::too_many_arguments)]
fn explicit_update(
    params: &ModelParams,
    grid: &SpaceTimeGrid,
    t: f64,
    u: &[f64],
    f: Option<&[f64]>,
    a: &StructureField,
    cfg: &SolverConfig,
    dt: f64,
) -> Vec<f64> {
    let m = params.m;
    let n = grid.n;
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let v: Vec<f64> = u.par_iter().map(|x| pow_m(*x, m)).collect();
    (0..grid.space_nodes())
        .into_par_iter()
        .map(|s| {
            if grid.is_boundary(s) {
                return boundary_value(grid, &cfg.boundary, s, t + dt, u[s]);
            }
            let mut div = 0.0;
            for ax in 0..n {
                let st = grid.stride(ax);
                let d_plus = a.coefficient(ax, &face_point(grid, s, ax), t);
                let d_minus = a.coefficient(ax, &face_point(grid, s - st, ax), t);
                div += d_plus * (v[s + st] - v[s]) - d_minus * (v[s] - v[s - st]);
            }
            u[s] + dt * (div * inv_h2 + f.map_or(0.0, |f| f[s]))
        })
        .collect()
}

/// Backward Euler with secant face coefficients lagged by Picard iteration.
#[allow(clippy::too_many_arguments)]
fn semi_implicit_update(
    params: &ModelParams,
    grid: &SpaceTimeGrid,
    t_next: f64,
    u_now: &[f64],
    f: Option<&[f64]>,
    a: &StructureField,
    cfg: &SolverConfig,
    floor: f64,
    dt: f64,
) -> Result<(Vec<f64>, usize, usize, bool)> {
    let ns = grid.space_nodes();
    let n = grid.n;
    let m = params.m;
    let scale = dt / (grid.h * grid.h);
    let interior: Vec<bool> = (0..ns).map(|s| !grid.is_boundary(s)).collect();
    let bvals: Vec<f64> =
        (0..ns).map(|s| if interior[s] { 0.0 } else { boundary_value(grid, &cfg.boundary, s, t_next, u_now[s]) }).collect();
    // Static part of the face coefficients: d_a at face midpoints, t_{n+1}.
    let d_face: Vec<Vec<f64>> = (0..n)
        .map(|ax| {
            let st = grid.stride(ax);
            let last = grid.cells[ax];
            (0..ns)
                .into_par_iter()
                .map(|s| {
                    let i = grid.unravel(s)[ax];
                    if i == last || (!interior[s] && !interior[s + st]) {
                        0.0
                    } else {
                        a.coefficient(ax, &face_point(grid, s, ax), t_next)
                    }
                })
                .collect()
        })
        .collect();
    let mut iterate: Vec<f64> = (0..ns).map(|s| if interior[s] { u_now[s] } else { bvals[s] }).collect();
    let mut linear_total = 0;
    let mut converged = false;
    let mut picard = 0;
    while picard < cfg.picard_max_iter {
        picard += 1;
        let coef: Vec<Vec<f64>> = (0..n)
            .map(|ax| {
                let st = grid.stride(ax);
                (0..ns)
                    .into_par_iter()
                    .map(|s| {
                        let d = d_face[ax][s];
                        if d == 0.0 {
                            0.0
                        } else {
                            scale * d * secant(iterate[s], iterate[s + st], m, floor)
                        }
                    })
                    .collect()
            })
            .collect();
        let diag: Vec<f64> = (0..ns)
            .into_par_iter()
            .map(|s| {
                if !interior[s] {
                    return 1.0;
                }
                let mut d = 1.0;
                for ax in 0..n {
                    let st = grid.stride(ax);
                    d += coef[ax][s] + coef[ax][s - st];
                }
                d
            })
            .collect();
        let rhs: Vec<f64> = (0..ns)
            .into_par_iter()
            .map(|s| {
                if !interior[s] {
                    return 0.0;
                }
                let mut r = u_now[s] + dt * f.map_or(0.0, |f| f[s]);
                for ax in 0..n {
                    let st = grid.stride(ax);
                    if !interior[s + st] {
                        r += coef[ax][s] * bvals[s + st];
                    }
                    if !interior[s - st] {
                        r += coef[ax][s - st] * bvals[s - st];
                    }
                }
                r
            })
            .collect();
        let apply = |x: &[f64], out: &mut [f64]| {
            out.par_iter_mut().enumerate().for_each(|(s, o)| {
                if !interior[s] {
                    *o = 0.0;
                    return;
                }
                let mut y = diag[s] * x[s];
                for ax in 0..n {
                    let st = grid.stride(ax);
                    y -= coef[ax][s] * x[s + st] + coef[ax][s - st] * x[s - st];
                }
                *o = y;
            });
        };
        let mut x: Vec<f64> = (0..ns).map(|s| if interior[s] { iterate[s] } else { 0.0 }).collect();
        let its = conjugate_gradient(&apply, &diag, &interior, &rhs, &mut x, cfg.linear_tol, cfg.linear_max_iter)?;
        linear_total += its;
        let mut change: f64 = 0.0;
        for s in 0..ns {
            let new = if interior[s] { x[s] } else { bvals[s] };
            change = change.max((new - iterate[s]).abs());
            iterate[s] = new;
        }
        if change <= cfg.picard_tol * max_abs(&iterate).max(1.0) || m == 1.0 {
            converged = true;
            break;
        }
    }
    Ok((iterate, picard, linear_total, converged))
}

/// Jacobi-preconditioned conjugate gradients on the masked unknowns.
pub fn conjugate_gradient<F>(
    apply: &F,
    diag: &[f64],
    mask: &[bool],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<usize>
where
    F: Fn(&[f64], &mut [f64]),
{
    let len = b.len();
    let b_norm = pairwise_dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut ax = vec![0.0; len];
    apply(x, &mut ax);
    let mut r: Vec<f64> = (0..len).map(|i| if mask[i] { b[i] - ax[i] } else { 0.0 }).collect();
    let precond = |r: &[f64]| -> Vec<f64> { r.par_iter().zip(diag).zip(mask).map(|((v, d), m)| if *m { v / d } else { 0.0 }).collect() };
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = pairwise_dot(&r, &z);
    let mut q = vec![0.0; len];
    for it in 0..max_iter {
        let res = pairwise_dot(&r, &r).sqrt();
        if !res.is_finite() {
            return Err(Error::LinearSolveDiverged { residual: res, iterations: it });
        }
        if res <= tol * b_norm {
            return Ok(it);
        }
        apply(&p, &mut q);
        let pq = pairwise_dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::LinearSolveDiverged { residual: res / b_norm, iterations: it });
        }
        let alpha = rz / pq;
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        z = precond(&r);
        let rz_new = pairwise_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    let res = pairwise_dot(&r, &r).sqrt() / b_norm;
    if res <= tol {
        Ok(max_iter)
    } else {
        Err(Error::LinearSolveDiverged { residual: res, iterations: max_iter })
    }
}

/// Full trajectory on `grid` from the initial slice `u0`.
pub fn solve(
    params: &ModelParams,
    grid: &SpaceTimeGrid,
    u0: &[f64],
    f: Option<&ScalarField>,
    a: &StructureField,
    cfg: &SolverConfig,
) -> Result<Solution> {
    cfg.validate()?;
    let ns = grid.space_nodes();
    if u0.len() != ns {
        return Err(Error::FieldMismatch(format!("initial slice has {} values for {ns} nodes", u0.len())));
    }
    if let Some(f) = f {
        if f.grid != *grid {
            return Err(Error::FieldMismatch("source lives on a different grid".into()));
        }
    }
    if u0.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::FieldMismatch("initial datum must be nonnegative".into()));
    }
    let floor = cfg.floor_for(u0);
    let mut values = Vec::with_capacity(grid.node_count());
    values.extend_from_slice(u0);
    let mut steps = Vec::with_capacity(grid.steps);
    let mut clamp_count = 0;
    for k in 0..grid.steps {
        let t = grid.time(k);
        let src_k = match cfg.scheme {
            Scheme::Explicit => k,
            Scheme::SemiImplicit => k + 1,
        };
        let fs = f.map(|f| f.slice(src_k));
        let out = step(params, grid, t, &values[k * ns..(k + 1) * ns], fs, a, cfg, floor, grid.dt)?;
        clamp_count += out.stats.clamped;
        steps.push(out.stats);
        values.extend_from_slice(&out.u_next);
    }
    let field = ScalarField::nonnegative(*grid, values, "u")?;
    let clamp_fraction = clamp_count as f64 / grid.node_count() as f64;
    Ok(Solution { field, stats: SolveStats { floor, clamp_count, clamp_fraction, steps } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Barenblatt;

    fn params() -> ModelParams {
        ModelParams::new(2, 0.5).unwrap()
    }

    #[test]
    fn constants_are_preserved() {
        let g = SpaceTimeGrid::cube(2, 1.0, 12, (0.0, 0.1), 5).unwrap();
        for scheme in [Scheme::Explicit, Scheme::SemiImplicit] {
            let cfg = SolverConfig { scheme, u_floor: Some(1.0), ..Default::default() };
            let u0 = vec![2.0; g.space_nodes()];
            let g2 = SpaceTimeGrid::cube(2, 1.0, 12, (0.0, 1e-4), 5).unwrap();
            let grid = if scheme == Scheme::Explicit { g2 } else { g };
            let sol = solve(&params(), &grid, &u0, None, &StructureField::identity(), &cfg).unwrap();
            assert!(sol.field.values.iter().all(|v| (v - 2.0).abs() < 1e-13), "{scheme:?}");
        }
    }

    #[test]
    fn pure_source_single_explicit_step() {
        let g = SpaceTimeGrid::cube(2, 1.0, 8, (0.0, 0.001), 1).unwrap();
        let cfg = SolverConfig {
            scheme: Scheme::Explicit,
            u_floor: Some(1.0),
            boundary: Boundary::Trace(Arc::new(|_, t| t)),
            ..Default::default()
        };
        let f = ScalarField::constant(g, 1.0, "f");
        let out = step(&params(), &g, 0.0, &vec![0.0; g.space_nodes()], Some(f.slice(0)), &StructureField::identity(), &cfg, 1.0, g.dt)
            .unwrap();
        assert!(out.u_next.iter().all(|v| (v - g.dt).abs() < 1e-15));
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = SpaceTimeGrid::cube(1, 1.0, 16, (0.0, 0.1), 4).unwrap();
        let sol = solve(&params(), &g, &vec![0.0; g.space_nodes()], None, &StructureField::identity(), &SolverConfig::default())
            .unwrap();
        assert!(sol.field.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn explicit_cfl_is_enforced() {
        let g = SpaceTimeGrid::cube(1, 1.0, 64, (0.0, 1.0), 2).unwrap();
        let cfg = SolverConfig { scheme: Scheme::Explicit, ..Default::default() };
        let err = solve(&params(), &g, &vec![1.0; g.space_nodes()], None, &StructureField::identity(), &cfg);
        assert!(matches!(err, Err(Error::CflViolation { .. })));
    }

    #[test]
    fn barenblatt_semi_implicit_is_accurate() {
        let p = params();
        let b = Barenblatt::new(&p, 1.0).unwrap();
        let g = SpaceTimeGrid::cube(2, 2.0, 32, (1.0, 1.5), 32).unwrap();
        let exact = b.sample(&g).unwrap();
        let cfg = SolverConfig { boundary: Boundary::Trace(Arc::new(move |x, t| b.value(x, t))), ..Default::default() };
        let sol = solve(&p, &g, exact.slice(0), None, &StructureField::identity(), &cfg).unwrap();
        let last = g.steps;
        let err: f64 = sol.field.slice(last).iter().zip(exact.slice(last)).map(|(a, b)| (a - b).abs()).sum();
        let norm: f64 = exact.slice(last).iter().sum();
        assert!(err / norm < 0.02, "relative L1 error {}", err / norm);
        assert_eq!(sol.stats.clamp_count, 0);
    }

    #[test]
    fn explicit_and_semi_implicit_agree() {
        let p = params();
        let b = Barenblatt::new(&p, 1.0).unwrap();
        let g = SpaceTimeGrid::cube(1, 2.0, 32, (1.0, 1.1), 400).unwrap();
        let exact = b.sample(&g).unwrap();
        let trace = Boundary::Trace(Arc::new(move |x, t| b.value(x, t)));
        let ex = SolverConfig { scheme: Scheme::Explicit, boundary: trace.clone(), ..Default::default() };
        let im = SolverConfig { boundary: trace, ..Default::default() };
        let a = solve(&p, &g, exact.slice(0), None, &StructureField::identity(), &ex).unwrap();
        let c = solve(&p, &g, exact.slice(0), None, &StructureField::identity(), &im).unwrap();
        let diff = a.field.slice(g.steps).iter().zip(c.field.slice(g.steps)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-3, "{diff}");
    }

    #[test]
    fn linear_solver_reports_divergence() {
        let diag = vec![1.0; 3];
        let mask = vec![true; 3];
        let apply = |x: &[f64], o: &mut [f64]| {
            o[0] = -x[0];
            o[1] = -x[1];
            o[2] = -x[2];
        };
        let mut x = vec![0.0; 3];
        let r = conjugate_gradient(&apply, &diag, &mask, &[1.0, 2.0, 3.0], &mut x, 1e-12, 10);
        assert!(matches!(r, Err(Error::LinearSolveDiverged { .. })));
    }
}
