use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{tilde_r, GeometryConstants, ScalingProfile};
use crate::grid::{cylinder_mean, dist, Cylinder, FieldIntegrator, Point, ScalarField};

/// Outcome of the two-point inclusion test at one height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Engulfing {
    pub s: f64,
    pub intersects: bool,
    /// Smallest grid factor c with Q(s,z) ⊂ Q(cs, y) and Q(s,y) ⊂ Q(cs, z);
    /// `None` when no stored height suffices.
    pub c1: Option<f64>,
}

/// Whether Q(s_i, a) ⊂ Q(s_j, b) for stored cylinders of two profiles.
fn included(a: &ScalingProfile, i: usize, b: &ScalingProfile, j: usize) -> bool {
    let n = a.consts.n;
    let qa = a.cylinder(i);
    let qb = b.cylinder(j);
    let time_ok = (a.t0 - b.t0).abs() + 0.5 * qa.tau <= 0.5 * qb.tau * (1.0 + 1e-12);
    let space_ok = dist(n, &a.center, &b.center) + qa.radius <= qb.radius * (1.0 + 1e-12);
    time_ok && space_ok
}

/// Minimal empirical engulfing constant of two profiles at height `s`.
pub fn two_point_engulfing(z: &ScalingProfile, y: &ScalingProfile, s: f64) -> Result<Engulfing> {
    let i = z.index_of(s)?;
    let iy = y.index_of(s)?;
    if i != iy {
        return Err(Error::ProfileMissing(s));
    }
    let n = z.consts.n;
    let intersects = z.cylinder(i).intersects(n, &y.cylinder(i));
    let mut c1 = None;
    for j in i..z.len() {
        if included(z, i, y, j) && included(y, i, z, j) {
            c1 = Some(z.s[j] / z.s[i]);
            break;
        }
    }
    Ok(Engulfing { s, intersects, c1 })
}

/// Ambient comparison θ_o ≤ θ_{S,z} ≤ c K^{2pǎ} θ_o over a set of base points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientReport {
    pub theta_o: f64,
    /// (⨍⨍_{Q_{2S,2R}} |f|)^{(2−p)/p} / θ_o.
    pub ambient_ratio: f64,
    pub ambient_subintrinsic: bool,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// max ratio / K^{2pǎ}: the measured constant c.
    pub implied_c: f64,
}

/// θ_{S,z} = S / r̃(S, z)² for base points z in Q_{S,R}(center), compared with θ_o = S/R².
pub fn ambient_theta_check(
    f: &ScalarField,
    fi: &FieldIntegrator,
    center: &Point,
    t_c: f64,
    points: &[(Point, f64)],
    consts: &GeometryConstants,
) -> Result<AmbientReport> {
    let (big_s, big_r) = (consts.s_max, consts.r_max);
    let ambient = Cylinder::centered(*center, t_c, 2.0 * big_s, 2.0 * big_r);
    let g = &f.grid;
    let (a, b) = ambient.time_interval();
    let inside = a >= g.t_start - 1e-12
        && b <= g.t_end + 1e-12
        && (0..g.n).all(|ax| center[ax] - 2.0 * big_r >= g.lo[ax] - 1e-12 && center[ax] + 2.0 * big_r <= g.hi[ax] + 1e-12);
    if !inside {
        return Err(Error::AmbientOutsideDomain("Q_{2S,2R} leaves the grid".into()));
    }
    let theta_o = big_s / (big_r * big_r);
    let p = consts.p;
    let ambient_ratio = cylinder_mean(f, &ambient, 1.0)?.powf((2.0 - p) / p) / theta_o;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for (x, t) in points {
        let inner = Cylinder::centered(*center, t_c, big_s, big_r);
        if !inner.contains(g.n, x, *t) {
            return Err(Error::HypothesisUnmet("base point outside Q_{S,R}".into()));
        }
        let rt = tilde_r(fi, p, x, *t, big_s, big_r).value;
        let ratio = big_s / (rt * rt) / theta_o;
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
    }
    Ok(AmbientReport {
        theta_o,
        ambient_ratio,
        ambient_subintrinsic: ambient_ratio <= consts.k_intr,
        min_ratio,
        max_ratio,
        implied_c: max_ratio / consts.k_intr.powf(2.0 * p * consts.a_check),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_profile;
    use crate::grid::{point, ModelParams, SpaceTimeGrid};

    fn parabolic() -> (FieldIntegrator, GeometryConstants) {
        let g = SpaceTimeGrid::cube(2, 3.0, 48, (0.0, 4.0), 16).unwrap();
        let fi = FieldIntegrator::new(&ScalarField::constant(g, 1.0, "one"));
        let c = GeometryConstants::new(&ModelParams::new(2, 0.5).unwrap(), 0.25, 1.0, 1.0, 4.0)
            .unwrap()
            .with_s_grid(2f64.powf(0.125), 64)
            .unwrap();
        (fi, c)
    }

    #[test]
    fn same_point_needs_no_enlargement() {
        let (fi, c) = parabolic();
        let z = build_profile(&fi, &point(&[0.0, 0.0]), 2.0, &c).unwrap();
        let e = two_point_engulfing(&z, &z, z.s[10]).unwrap();
        assert!(e.intersects);
        assert_eq!(e.c1, Some(1.0));
    }

    #[test]
    fn parabolic_closed_form() {
        let (fi, c) = parabolic();
        let z = build_profile(&fi, &point(&[0.0, 0.0]), 2.0, &c).unwrap();
        let y = build_profile(&fi, &point(&[0.05, 0.02]), 2.01, &c).unwrap();
        let i = 30;
        let s = z.s[i];
        let d = (0.05f64 * 0.05 + 0.02 * 0.02).sqrt();
        let need = (1.0 + 2.0 * 0.01 / s).max((1.0 + d / s.sqrt()).powi(2));
        let e = two_point_engulfing(&z, &y, s).unwrap();
        let c1 = e.c1.unwrap();
        assert!(c1 >= need * (1.0 - 1e-6));
        assert!(c1 < need * c.s_ratio * (1.0 + 1e-6), "{c1} vs {need}");
    }

    #[test]
    fn ambient_constant_field() {
        let g = SpaceTimeGrid::cube(2, 3.0, 48, (0.0, 4.0), 16).unwrap();
        let f = ScalarField::constant(g, 1.0, "one");
        let fi = FieldIntegrator::new(&f);
        let c = GeometryConstants::new(&ModelParams::new(2, 0.5).unwrap(), 0.25, 1.0, 1.0, 4.0).unwrap();
        let pts = vec![(point(&[0.1, 0.2]), 2.1), (point(&[-0.5, 0.3]), 1.7)];
        let rep = ambient_theta_check(&f, &fi, &point(&[0.0, 0.0]), 2.0, &pts, &c).unwrap();
        assert!((rep.min_ratio - 1.0).abs() < 1e-5 && (rep.max_ratio - 1.0).abs() < 1e-5);
        assert!(rep.ambient_subintrinsic);
    }
}
