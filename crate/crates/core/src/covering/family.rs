use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_profiles, GeometryConstants, ScalingProfile};
use crate::grid::{Cylinder, FieldIntegrator, Point, ScalarField, SpaceTimeGrid, MAX_DIM};

/// Nodes of `grid` on the stride lattice through the central node lying in
/// the open cylinder (−a, a) × B_a.
pub fn lattice_points(grid: &SpaceTimeGrid, stride: usize, a: f64) -> Vec<(Point, f64)> {
    let stride = stride.max(1);
    let n = grid.n;
    let mut out = Vec::new();
    let k_mid = grid.steps / 2;
    for k in 0..grid.time_nodes() {
        if (k as isize - k_mid as isize).rem_euclid(stride as isize) != 0 {
            continue;
        }
        let t = grid.time(k);
        if t.abs() >= a {
            continue;
        }
        for s in 0..grid.space_nodes() {
            let idx = grid.unravel(s);
            let on_lattice = (0..n).all(|ax| (idx[ax] as isize - (grid.cells[ax] / 2) as isize).rem_euclid(stride as isize) == 0);
            if !on_lattice {
                continue;
            }
            let x = grid.node_point(s);
            if (0..n).map(|ax| x[ax] * x[ax]).sum::<f64>().sqrt() < a {
                out.push((x, t));
            }
        }
    }
    out
}

/// Smallest i < len with `pred(i)` for a predicate monotone in i.
fn first_true<P: Fn(usize) -> bool>(len: usize, pred: P) -> Option<usize> {
    let (mut lo, mut hi) = (0, len);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    (lo < len).then_some(lo)
}

/// Stored cylinders Q(s, y) for base points y on a lattice of Q_{1,1}.
#[derive(Debug, Clone)]
pub struct ProfileFamily {
    pub grid: SpaceTimeGrid,
    pub consts: GeometryConstants,
    pub stride: usize,
    pub profiles: Vec<ScalingProfile>,
}

impl ProfileFamily {
    /// Profiles of u^{m+1} over lattice points of Q_{1,1} with S = R = 1.
    pub fn build(u: &ScalarField, consts: &GeometryConstants, stride: usize) -> Result<Self> {
        let m = consts.m;
        let g = u.grid;
        let fi = FieldIntegrator::new(&u.map("u_pow", |v| v.max(0.0).powf(m + 1.0)));
        let points = lattice_points(&g, stride, 1.0);
        if points.is_empty() {
            return Err(Error::InvalidGrid("no lattice point inside Q_{1,1}".into()));
        }
        let profiles = build_profiles(&fi, &points, consts)?;
        Ok(ProfileFamily { grid: g, consts: *consts, stride, profiles })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn cylinder(&self, p: usize, i: usize) -> Cylinder {
        self.profiles[p].cylinder(i)
    }

    /// Smallest index whose cylinder contains (x, t) in its interior.
    pub fn first_containing(&self, p: usize, x: &Point, t: f64) -> Option<usize> {
        let prof = &self.profiles[p];
        let n = self.grid.n;
        first_true(prof.len(), |i| prof.cylinder(i).contains(n, x, t))
    }

    /// Smallest index whose closed cylinder contains `q`.
    pub fn first_enclosing(&self, p: usize, q: &Cylinder) -> Option<usize> {
        let prof = &self.profiles[p];
        let n = self.grid.n;
        first_true(prof.len(), |i| prof.cylinder(i).contains_cylinder(n, q))
    }

    /// Means of |F| over every stored cylinder.
    pub fn means_of(&self, fi: &FieldIntegrator) -> Result<FamilyMeans> {
        if fi.grid() != &self.grid {
            return Err(Error::FieldMismatch("field and family live on different grids".into()));
        }
        let means: Vec<Vec<f64>> = self
            .profiles
            .par_iter()
            .map(|prof| (0..prof.len()).map(|i| fi.mean(&prof.cylinder(i))).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?;
        let suffix_max = means
            .iter()
            .map(|row| {
                let mut out = row.clone();
                for i in (0..out.len().saturating_sub(1)).rev() {
                    out[i] = out[i].max(out[i + 1]);
                }
                out
            })
            .collect();
        Ok(FamilyMeans { means, suffix_max })
    }

    /// Lexicographic key (t, x) of a base point.
    pub fn base_key(&self, p: usize) -> [f64; MAX_DIM + 1] {
        let prof = &self.profiles[p];
        let mut k = [0.0; MAX_DIM + 1];
        k[0] = prof.t0;
        k[1..].copy_from_slice(&prof.center);
        k
    }
}

/// ⨍⨍ |F| over every stored cylinder with suffix maxima along each profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMeans {
    pub means: Vec<Vec<f64>>,
    pub suffix_max: Vec<Vec<f64>>,
}
