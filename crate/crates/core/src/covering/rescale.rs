use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cylinder_mean, grad_energy_field, Cylinder, Point, ScalarField, SpaceTimeGrid, MAX_DIM};

/// Multilinear interpolation of a field in space and time; clamps to the domain.
pub fn interpolate(field: &ScalarField, x: &Point, t: f64) -> f64 {
    let g = &field.grid;
    let n = g.n;
    let mut base = [0usize; MAX_DIM];
    let mut frac = [0.0; MAX_DIM];
    for a in 0..n {
        let xi = ((x[a] - g.lo[a]) / g.h).clamp(0.0, g.cells[a] as f64);
        let i0 = (xi.floor() as usize).min(g.cells[a] - 1);
        base[a] = i0;
        frac[a] = xi - i0 as f64;
    }
    let tk = ((t - g.t_start) / g.dt).clamp(0.0, g.steps as f64);
    let k0 = (tk.floor() as usize).min(g.steps - 1);
    let ft = tk - k0 as f64;
    let mut total = 0.0;
    for dk in 0..2 {
        let wt = if dk == 0 { 1.0 - ft } else { ft };
        if wt == 0.0 {
            continue;
        }
        for corner in 0..(1usize << n) {
            let mut w = wt;
            let mut idx = [0usize; MAX_DIM];
            for a in 0..n {
                let bit = (corner >> a) & 1;
                idx[a] = base[a] + bit;
                w *= if bit == 0 { 1.0 - frac[a] } else { frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            total += w * field.at(k0 + dk, g.spatial_index(idx));
        }
    }
    total
}

/// Affine map from the unit cylinder Q_{2,2} to the ambient cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScaling {
    pub center: Point,
    pub t_center: f64,
    pub radius: f64,
    pub theta_o: f64,
    /// λ_o = θ_o^{1/(m−1)}.
    pub lambda_o: f64,
    pub m: f64,
    /// (⨍⨍_{Q_{2θ_oR², 2R}} u^{m+1})^{(1−m)/(m+1)} / θ_o.
    pub ambient_ratio: f64,
}

impl UnitScaling {
    /// Original coordinates of the unit point (y, s).
    pub fn to_original(&self, n: usize, y: &Point, s: f64) -> (Point, f64) {
        let mut x = [0.0; MAX_DIM];
        for a in 0..n {
            x[a] = self.center[a] + self.radius * y[a];
        }
        (x, self.t_center + self.theta_o * self.radius * self.radius * s)
    }

    /// Factor λ_o^m R² multiplying the source.
    pub fn source_factor(&self) -> f64 {
        self.lambda_o.powf(self.m) * self.radius * self.radius
    }
}

/// Rescaled solution and source on the unit grid.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitPair {
    pub u: ScalarField,
    pub f: ScalarField,
    pub scaling: UnitScaling,
}

/// Unit grid [−2, 2]^n × [−2, 2].
pub fn unit_grid(n: usize, cells: usize, steps: usize) -> Result<SpaceTimeGrid> {
    SpaceTimeGrid::cube(n, 2.0, cells, (-2.0, 2.0), steps)
}

/// ũ(y,s) = λ_o u(x_c + R y, t_c + λ_o^{m−1} R² s) and f̃ = λ_o^m R² f(·) on the unit grid.
///
/// Fails with `NotSubIntrinsic` when (⨍⨍ u^{m+1})^{(1−m)/(m+1)} > K θ_o on Q_{2θ_oR², 2R}.
#[allow(clippy::too_many_arguments)]
pub fn rescale_to_unit(
    u: &ScalarField,
    f: Option<&ScalarField>,
    m: f64,
    center: &Point,
    t_center: f64,
    radius: f64,
    theta_o: f64,
    k_bound: f64,
    unit: &SpaceTimeGrid,
) -> Result<UnitPair> {
    let g = &u.grid;
    let n = g.n;
    if unit.n != n {
        return Err(Error::FieldMismatch(format!("unit grid dimension {} vs field {n}", unit.n)));
    }
    if !(radius > 0.0 && theta_o > 0.0) {
        return Err(Error::InvalidConstants("radius and theta_o must be positive".into()));
    }
    let half_t = 2.0 * theta_o * radius * radius;
    let inside = t_center - half_t >= g.t_start - 1e-12
        && t_center + half_t <= g.t_end + 1e-12
        && (0..n).all(|a| center[a] - 2.0 * radius >= g.lo[a] - 1e-12 && center[a] + 2.0 * radius <= g.hi[a] + 1e-12);
    if !inside {
        return Err(Error::AmbientOutsideDomain("box of Q_{2 theta_o R^2, 2R} leaves the grid".into()));
    }
    let ambient = Cylinder::centered(*center, t_center, half_t, 2.0 * radius);
    let mean = cylinder_mean(u, &ambient, m + 1.0)?;
    let ambient_ratio = mean.powf((1.0 - m) / (1.0 + m)) / theta_o;
    if ambient_ratio > k_bound {
        return Err(Error::NotSubIntrinsic { ratio: ambient_ratio, bound: k_bound });
    }
    let lambda_o = theta_o.powf(1.0 / (m - 1.0));
    let scaling = UnitScaling { center: *center, t_center, radius, theta_o, lambda_o, m, ambient_ratio };
    let map = |field: &ScalarField, factor: f64, name: &str| {
        let ns = unit.space_nodes();
        let mut vals = vec![0.0; unit.node_count()];
        vals.par_chunks_mut(ns).enumerate().for_each(|(k, chunk)| {
            let s = unit.time(k);
            for (sp, v) in chunk.iter_mut().enumerate() {
                let (x, t) = scaling.to_original(n, &unit.node_point(sp), s);
                *v = factor * interpolate(field, &x, t);
            }
        });
        let nonneg = vals.iter().all(|v| *v >= 0.0);
        let mut out = ScalarField::new(*unit, vals, name).expect("sizes match");
        out.nonnegative = nonneg;
        out
    };
    let ut = map(u, lambda_o, "u_unit");
    let ft = match f {
        Some(f) => map(f, scaling.source_factor(), "f_unit"),
        None => ScalarField::zeros(*unit, "f_unit"),
    };
    Ok(UnitPair { u: ut, f: ft, scaling })
}

/// F = |Dũ^m|², set to zero at nodes outside B_2.
pub fn unit_energy_field(u: &ScalarField, m: f64) -> ScalarField {
    let mut f = grad_energy_field(u, m);
    let g = f.grid;
    let ns = g.space_nodes();
    for s in 0..ns {
        let x = g.node_point(s);
        let r = (0..g.n).map(|a| x[a] * x[a]).sum::<f64>().sqrt();
        if r > 2.0 {
            for k in 0..g.time_nodes() {
                f.values[k * ns + s] = 0.0;
            }
        }
    }
    f.name = "grad_energy_unit".into();
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{point, ModelParams};
    use crate::solver::{weak_residual, Barenblatt, Bump, StructureField};

    #[test]
    fn interpolation_reproduces_multilinear_data() {
        let g = SpaceTimeGrid::cube(2, 1.0, 6, (0.0, 1.0), 3).unwrap();
        let lin = |x: &Point, t: f64| 1.0 + 2.0 * x[0] - x[1] + 3.0 * t + x[0] * x[1] * t;
        let f = ScalarField::from_fn(g, "f", lin);
        for (x, t) in [([0.13, -0.71], 0.37), ([-1.0, 1.0], 1.0), ([0.5, 0.25], 0.0)] {
            let p = point(&x);
            assert!((interpolate(&f, &p, t) - lin(&p, t)).abs() < 1e-13);
        }
    }

    #[test]
    fn identity_scaling() {
        let g = unit_grid(1, 16, 8).unwrap();
        let u = ScalarField::from_fn(g, "u", |x, t| 1.0 + 0.1 * x[0] + 0.05 * t);
        let pair = rescale_to_unit(&u, None, 0.5, &point(&[0.0]), 0.0, 1.0, 1.0, 4.0, &g).unwrap();
        assert!((pair.scaling.lambda_o - 1.0).abs() < 1e-15);
        for (a, b) in pair.u.values.iter().zip(&u.values) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_maps_to_one() {
        let m = 0.5;
        let c: f64 = 3.0;
        let g = SpaceTimeGrid::cube(2, 4.0, 16, (0.0, 40.0), 8).unwrap();
        let u = ScalarField::constant(g, c, "u");
        let theta = c.powf(1.0 - m);
        let unit = unit_grid(2, 8, 8).unwrap();
        let pair = rescale_to_unit(&u, None, m, &point(&[0.0, 0.0]), 20.0, 1.5, theta, 1.0, &unit).unwrap();
        assert!(pair.u.values.iter().all(|v| (v - 1.0).abs() < 1e-13));
        let q22 = Cylinder::centered(point(&[0.0, 0.0]), 0.0, 2.0, 2.0);
        assert!((cylinder_mean(&pair.u, &q22, m + 1.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((pair.scaling.ambient_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_super_intrinsic_ambient() {
        let g = SpaceTimeGrid::cube(1, 4.0, 16, (0.0, 40.0), 8).unwrap();
        let u = ScalarField::constant(g, 16.0, "u");
        let unit = unit_grid(1, 8, 8).unwrap();
        let err = rescale_to_unit(&u, None, 0.5, &point(&[0.0]), 20.0, 1.0, 1.0, 2.0, &unit).unwrap_err();
        assert!(matches!(err, Error::NotSubIntrinsic { .. }));
    }

    #[test]
    fn rescaled_barenblatt_solves_scaled_equation() {
        let params = ModelParams::new(1, 0.5).unwrap();
        let b = Barenblatt::new(&params, 1.0).unwrap();
        let g = SpaceTimeGrid::cube(1, 3.0, 768, (1.0, 3.0), 256).unwrap();
        let u = b.sample(&g).unwrap();
        let a = StructureField::identity();
        let theta = 0.5;
        let (r, tc) = (1.0, 2.0);
        let unit = unit_grid(1, 512, 256).unwrap();
        let pair = rescale_to_unit(&u, None, params.m, &point(&[0.0]), tc, r, theta, 100.0, &unit).unwrap();
        // Residual of u on the image of the unit battery, against the unit residual over λ_o^m R².
        let original = SpaceTimeGrid::new(&[-2.0 * r], &[2.0 * r], &[512], (tc - 2.0 * theta * r * r, tc + 2.0 * theta * r * r), 256)
            .unwrap();
        let u_o = b.sample(&original).unwrap();
        let res_o = weak_residual(&params, &u_o, None, &a, &Bump::battery(&original)).unwrap().max;
        let res_u = weak_residual(&params, &pair.u, Some(&pair.f), &a, &Bump::battery(&unit)).unwrap().max;
        let scaled = res_u / pair.scaling.source_factor();
        assert!(scaled <= 2.0 * res_o + 1e-9, "unit {scaled} vs original {res_o}");
    }
}
