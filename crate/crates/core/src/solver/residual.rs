use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{discrete_gradient_of_power, ModelParams, Point, ScalarField, SpaceTimeGrid, MAX_DIM};
use crate::reduce::pairwise_sum;
use crate::solver::StructureField;

/// Smooth compactly supported test function
/// φ(x, t) = Π_a ψ((x_a − c_a)/r) · ψ((t − t_c)/r_t), ψ(y) = exp(−1/(1−y²)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
    pub t_center: f64,
    pub t_radius: f64,
}

/// ψ and ψ'.
#[inline]
fn psi(y: f64) -> (f64, f64) {
    if y.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - y * y;
    let v = (-1.0 / q).exp();
    (v, v * (-2.0 * y / (q * q)))
}

impl Bump {
    /// φ, ∂_t φ and ∇φ at (x, t).
    pub fn eval(&self, n: usize, x: &Point, t: f64) -> (f64, f64, [f64; MAX_DIM]) {
        let (pt, dpt) = psi((t - self.t_center) / self.t_radius);
        if pt == 0.0 {
            return (0.0, 0.0, [0.0; MAX_DIM]);
        }
        let mut vals = [(1.0, 0.0); MAX_DIM];
        for a in 0..n {
            vals[a] = psi((x[a] - self.center[a]) / self.radius);
            if vals[a].0 == 0.0 {
                return (0.0, 0.0, [0.0; MAX_DIM]);
            }
        }
        let space: f64 = vals[..n].iter().map(|v| v.0).product();
        let mut grad = [0.0; MAX_DIM];
        for a in 0..n {
            let others: f64 = (0..n).filter(|b| *b != a).map(|b| vals[b].0).product();
            grad[a] = vals[a].1 / self.radius * others * pt;
        }
        (space * pt, space * dpt / self.t_radius, grad)
    }

    /// 3ⁿ bumps spread around the center of the box, mid-interval in time.
    pub fn battery(grid: &SpaceTimeGrid) -> Vec<Bump> {
        let n = grid.n;
        let ext = (0..n).map(|a| grid.hi[a] - grid.lo[a]).fold(f64::INFINITY, f64::min);
        let radius = 0.3 * ext;
        let t_center = 0.5 * (grid.t_start + grid.t_end);
        let t_radius = 0.45 * (grid.t_end - grid.t_start);
        let mut out = Vec::new();
        for code in 0..3usize.pow(n as u32) {
            let mut c = [0.0; MAX_DIM];
            let mut rem = code;
            for (a, ca) in c.iter_mut().enumerate().take(n) {
                let off = (rem % 3) as f64 - 1.0;
                rem /= 3;
                *ca = 0.5 * (grid.lo[a] + grid.hi[a]) + 0.15 * ext * off;
            }
            out.push(Bump { center: c, radius, t_center, t_radius });
        }
        out
    }
}

/// Normalized weak residuals of a trajectory against a bump battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max: f64,
    pub per_bump: Vec<f64>,
}

fn dual_weight(grid: &SpaceTimeGrid, k: usize, s: usize) -> f64 {
    let idx = grid.unravel(s);
    let mut w = 1.0;
    for (a, i) in idx.iter().enumerate().take(grid.n) {
        let (lo, hi) = grid.cell_extent(a, *i);
        w *= hi - lo;
    }
    let (t0, t1) = grid.time_cell(k);
    w * (t1 - t0)
}

/// max over the battery of |∫∫ −u φ_t + A(x,t,u,Du^m)·Dφ − f φ| / ‖φ‖_{L¹}.
pub fn weak_residual(
    params: &ModelParams,
    u: &ScalarField,
    f: Option<&ScalarField>,
    a: &StructureField,
    battery: &[Bump],
) -> Result<ResidualReport> {
    let grid = u.grid;
    if let Some(f) = f {
        if f.grid != grid {
            return Err(Error::FieldMismatch("source lives on a different grid".into()));
        }
    }
    let du = discrete_gradient_of_power(u, params.m);
    let ns = grid.space_nodes();
    let n = grid.n;
    let per_bump: Vec<f64> = battery
        .iter()
        .map(|b| {
            let terms: Vec<(f64, f64)> = (0..grid.node_count())
                .into_par_iter()
                .map(|node| {
                    let (k, s) = (node / ns, node % ns);
                    let x = grid.node_point(s);
                    let t = grid.time(k);
                    let (phi, phi_t, grad) = b.eval(n, &x, t);
                    if phi == 0.0 && phi_t == 0.0 {
                        return (0.0, 0.0);
                    }
                    let w = dual_weight(&grid, k, s);
                    let flux = a.apply(n, &x, t, &du.at(node));
                    let dot: f64 = (0..n).map(|i| flux[i] * grad[i]).sum();
                    let src = f.map_or(0.0, |f| f.values[node]);
                    (w * (-u.values[node] * phi_t + dot - src * phi), w * phi)
                })
                .collect();
            let num: Vec<f64> = terms.iter().map(|t| t.0).collect();
            let den: Vec<f64> = terms.iter().map(|t| t.1).collect();
            pairwise_sum(&num).abs() / pairwise_sum(&den)
        })
        .collect();
    let max = per_bump.iter().copied().fold(0.0, f64::max);
    Ok(ResidualReport { max, per_bump })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Barenblatt;

    #[test]
    fn bump_derivatives_match_differences() {
        let b = Bump { center: [0.1, -0.2, 0.0], radius: 0.7, t_center: 1.0, t_radius: 0.4 };
        let x = [0.3, 0.05, 0.0];
        let (_, pt, g) = b.eval(2, &x, 1.1);
        let e = 1e-6;
        let fd_t = (b.eval(2, &x, 1.1 + e).0 - b.eval(2, &x, 1.1 - e).0) / (2.0 * e);
        assert!((pt - fd_t).abs() < 1e-7);
        for a in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[a] += e;
            xm[a] -= e;
            let fd = (b.eval(2, &xp, 1.1).0 - b.eval(2, &xm, 1.1).0) / (2.0 * e);
            assert!((g[a] - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn constant_has_zero_residual() {
        let g = SpaceTimeGrid::cube(2, 1.0, 16, (0.0, 1.0), 8).unwrap();
        let p = ModelParams::new(2, 0.5).unwrap();
        let u = ScalarField::constant(g, 3.0, "u");
        let r = weak_residual(&p, &u, None, &StructureField::identity(), &Bump::battery(&g)).unwrap();
        assert!(r.max < 1e-10, "{}", r.max);
    }

    #[test]
    fn sampled_barenblatt_residual_converges() {
        let p = ModelParams::new(1, 0.5).unwrap();
        let b = Barenblatt::new(&p, 1.0).unwrap();
        let res = |cells: usize| {
            let g = SpaceTimeGrid::cube(1, 2.0, cells, (1.0, 2.0), cells).unwrap();
            let u = b.sample(&g).unwrap();
            weak_residual(&p, &u, None, &StructureField::identity(), &Bump::battery(&g)).unwrap().max
        };
        let (r1, r2) = (res(32), res(64));
        assert!((r1 / r2).log2() >= 1.0, "{r1} {r2}");
    }
}
