use crate::error::{Error, Result};
use crate::grid::quadrature::ball_weights;
use crate::grid::{dist, grad_energy_field, Cylinder, CylinderWeights, ModelParams, Point, ScalarField, SpaceTimeGrid};

/// Solution, source and |Du^m|² on one grid.
#[derive(Debug, Clone)]
pub struct EstimateFields {
    pub u: ScalarField,
    pub f: ScalarField,
    /// F = |Du^m|².
    pub energy: ScalarField,
    pub m: f64,
    pub nu: f64,
}

impl EstimateFields {
    /// A missing source is zero.
    pub fn new(u: ScalarField, f: Option<ScalarField>, params: &ModelParams) -> Result<Self> {
        let f = f.unwrap_or_else(|| ScalarField::zeros(u.grid, "f"));
        if f.grid != u.grid {
            return Err(Error::FieldMismatch("source and solution live on different grids".into()));
        }
        let energy = grad_energy_field(&u, params.m);
        Ok(EstimateFields { u, f, energy, m: params.m, nu: params.nu })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.u.grid
    }
}

/// Raises unless `q` lies in the closed grid domain.
pub fn ensure_inside(grid: &SpaceTimeGrid, q: &Cylinder) -> Result<()> {
    let (a, b) = q.time_interval();
    let tol = 1e-12 * (1.0 + grid.t_end.abs());
    let time_ok = a >= grid.t_start - tol && b <= grid.t_end + tol;
    let space_ok = (0..grid.n).all(|ax| q.center[ax] - q.radius >= grid.lo[ax] - 1e-12 && q.center[ax] + q.radius <= grid.hi[ax] + 1e-12);
    if time_ok && space_ok {
        Ok(())
    } else {
        Err(Error::AmbientOutsideDomain(format!("{q:?}")))
    }
}

/// ∫∫_Q g with g evaluated at flat node indices.
pub fn integrate<F: Fn(usize) -> f64>(grid: &SpaceTimeGrid, q: &Cylinder, g: F) -> Result<f64> {
    Ok(CylinderWeights::new(grid, q)?.integrate(g))
}

/// ⨍⨍_Q g with g evaluated at flat node indices.
pub fn average<F: Fn(usize) -> f64>(grid: &SpaceTimeGrid, q: &Cylinder, g: F) -> Result<f64> {
    Ok(CylinderWeights::new(grid, q)?.mean(g))
}

/// Maximum of g over the nodes carrying quadrature weight on Q.
pub fn support_max<F: Fn(usize) -> f64>(grid: &SpaceTimeGrid, q: &Cylinder, g: F) -> Result<f64> {
    let w = CylinderWeights::new(grid, q)?;
    let ns = grid.space_nodes();
    let mut best = f64::NEG_INFINITY;
    for &(k, _) in &w.time {
        for &(s, _) in &w.space {
            best = best.max(g(k * ns + s));
        }
    }
    Ok(best)
}

/// Time nodes in [a, b]; the node nearest the midpoint when none lies inside.
pub fn time_nodes_in(grid: &SpaceTimeGrid, a: f64, b: f64) -> Vec<usize> {
    let v: Vec<usize> = (0..grid.time_nodes()).filter(|&k| grid.time(k) >= a - 1e-12 && grid.time(k) <= b + 1e-12).collect();
    if v.is_empty() {
        vec![grid.nearest_time_index(0.5 * (a + b))]
    } else {
        v
    }
}

/// ∫_{B_r(c)} g(·, t_k) dx with g evaluated at flat node indices.
pub fn slice_integral<F: Fn(usize) -> f64>(grid: &SpaceTimeGrid, k: usize, c: &Point, r: f64, g: F) -> f64 {
    let ns = grid.space_nodes();
    ball_weights(grid, c, r).iter().map(|&(s, w)| w * g(k * ns + s)).sum()
}

/// ∫_{B_r(c)} g(·, t_k) η(x) dx.
pub fn weighted_slice_integral<F: Fn(usize) -> f64, E: Fn(&Point) -> f64>(
    grid: &SpaceTimeGrid,
    k: usize,
    c: &Point,
    r: f64,
    g: F,
    eta: E,
) -> f64 {
    let ns = grid.space_nodes();
    ball_weights(grid, c, r).iter().map(|&(s, w)| w * eta(&grid.node_point(s)) * g(k * ns + s)).sum()
}

/// Measure of B_r(c) inside the domain.
pub fn ball_measure(grid: &SpaceTimeGrid, c: &Point, r: f64) -> f64 {
    ball_weights(grid, c, r).iter().map(|w| w.1).sum()
}

/// Distance from the spatial node of a flat index to `c`.
pub fn node_dist(grid: &SpaceTimeGrid, node: usize, c: &Point) -> f64 {
    dist(grid.n, &grid.node_point(node % grid.space_nodes()), c)
}
