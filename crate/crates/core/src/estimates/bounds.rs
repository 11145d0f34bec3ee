use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::fields::{average, ensure_inside, support_max};
use crate::estimates::{EstimateFields, InequalityReport};
use crate::geometry::{check_intrinsic, ScalingProfile};
use crate::grid::{Cylinder, ScalarField};

/// Index of the first stored height ≥ h.
pub fn stored_index(prof: &ScalingProfile, h: f64) -> Result<usize> {
    prof.s.iter().position(|&s| s >= h * (1.0 - 1e-9)).ok_or(Error::ProfileMissing(h))
}

/// Cylinders with lower vertex (x₀, t₀) built from a centered profile at (x₀, t₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexCylinders {
    pub t: f64,
    /// B_{r(t)} × (t₀, t₀ + t].
    pub q_t: Cylinder,
    /// B_{r(3t/2)} × (t₀ − t/2, t₀ + t].
    pub q_three_halves: Cylinder,
    /// B_{r(2t)} × (t₀ − t, t₀ + t].
    pub q_double: Cylinder,
    pub theta_t: f64,
    pub theta_double: f64,
    /// Intrinsic ratio of `q_t` against θ(t).
    pub ratio: f64,
}

/// Builds the vertex cylinders at stored height index `i`, checking intrinsicity and the source smallness.
pub fn vertex_cylinders(fl: &EstimateFields, prof: &ScalingProfile, i: usize, k_intr: f64, c_small: f64) -> Result<VertexCylinders> {
    let g = fl.grid();
    let m = fl.m;
    let t = *prof.s.get(i).ok_or(Error::ProfileMissing(f64::NAN))?;
    let top = prof.t0 + t;
    let j3 = stored_index(prof, 1.5 * t)?;
    let j2 = stored_index(prof, 2.0 * t)?;
    let q_t = Cylinder::backward(prof.center, top, t, prof.r[i]);
    let q_three_halves = Cylinder::backward(prof.center, top, 1.5 * t, prof.r[j3]);
    let q_double = Cylinder::backward(prof.center, top, 2.0 * t, prof.r[j2]);
    ensure_inside(g, &q_double)?;
    let chk = check_intrinsic(&fl.u, &q_t, m, prof.theta[i], k_intr)?;
    if !chk.intrinsic {
        return Err(Error::NotIntrinsic { ratio: chk.ratio, k: k_intr });
    }
    let r2 = prof.r[j2] * prof.r[j2];
    let f = &fl.f.values;
    let lhs = support_max(g, &q_double, |n| r2 * f[n] * f[n])?;
    let rhs = c_small * prof.theta[j2].powf((1.0 + m) / (1.0 - m)) / t;
    if lhs > rhs {
        return Err(Error::FSmallnessFails { lhs, rhs });
    }
    Ok(VertexCylinders { t, q_t, q_three_halves, q_double, theta_t: prof.theta[i], theta_double: prof.theta[j2], ratio: chk.ratio })
}

/// Power-mean ordering (⨍⨍ u^m)^{1/m} ≤ (⨍⨍ u^{m+1})^{1/(m+1)} on `q`.
pub fn jensen_holds(u: &ScalarField, q: &Cylinder, m: f64) -> Result<bool> {
    let v = &u.values;
    let low = average(&u.grid, q, |n| v[n].max(0.0).powf(m))?.powf(1.0 / m);
    let high = average(&u.grid, q, |n| v[n].max(0.0).powf(m + 1.0))?.powf(1.0 / (m + 1.0));
    Ok(low <= high * (1.0 + 1e-12) + 1e-300)
}

/// max u over B_{r(t)} × [t₀, t₀ + t] against (⨍⨍_{Q_{2t}} u^p)^{1/p}.
pub fn sup_bound(fl: &EstimateFields, vc: &VertexCylinders, p_mean: f64, tolerance: f64) -> Result<InequalityReport> {
    if !(p_mean > 0.0) {
        return Err(Error::InvalidExponent(format!("mean exponent {p_mean} must be positive")));
    }
    let g = fl.grid();
    let u = &fl.u.values;
    let lhs = support_max(g, &vc.q_t, |n| u[n])?;
    let rhs = average(g, &vc.q_double, |n| u[n].max(0.0).powf(p_mean))?.powf(1.0 / p_mean);
    Ok(InequalityReport::new(&format!("sup_bound_p{p_mean}"), lhs, &[("power_mean", rhs)], tolerance)
        .with_cylinder("q_t", vc.q_t)
        .with_cylinder("q_2t", vc.q_double))
}

/// (⨍⨍_{Q_{3t/2}} u^{m+1})^{1/(m+1)} against (⨍⨍_{Q_{2t}} u^m)^{1/m}.
pub fn reverse_holder_u(fl: &EstimateFields, vc: &VertexCylinders, tolerance: f64) -> Result<InequalityReport> {
    let g = fl.grid();
    let m = fl.m;
    let u = &fl.u.values;
    let lhs = average(g, &vc.q_three_halves, |n| u[n].max(0.0).powf(m + 1.0))?.powf(1.0 / (m + 1.0));
    let rhs = average(g, &vc.q_double, |n| u[n].max(0.0).powf(m))?.powf(1.0 / m);
    Ok(InequalityReport::new("reverse_holder_u", lhs, &[("mean_u_m", rhs)], tolerance)
        .with_cylinder("q_3t_2", vc.q_three_halves)
        .with_cylinder("q_2t", vc.q_double)
        .with_check("jensen_q_3t_2", jensen_holds(&fl.u, &vc.q_three_halves, m)?)
        .with_check("jensen_q_2t", jensen_holds(&fl.u, &vc.q_double, m)?))
}

/// Intrinsicity of Q(a·s) given an intrinsic Q(s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCheck {
    pub factor: f64,
    /// Stored height used for a·s.
    pub height: f64,
    pub ratio: f64,
    pub intrinsic: bool,
}

pub fn intrinsic_consistency(
    u: &ScalarField,
    prof: &ScalingProfile,
    i: usize,
    factors: &[f64],
    k_intr: f64,
) -> Result<Vec<ConsistencyCheck>> {
    let m = prof.consts.m;
    let base = check_intrinsic(u, &prof.cylinder(i), m, prof.theta[i], k_intr)?;
    if !base.intrinsic {
        return Err(Error::NotIntrinsic { ratio: base.ratio, k: k_intr });
    }
    factors
        .iter()
        .map(|&a| {
            let j = stored_index(prof, a * prof.s[i])?;
            let c = check_intrinsic(u, &prof.cylinder(j), m, prof.theta[j], k_intr)?;
            Ok(ConsistencyCheck { factor: a, height: prof.s[j], ratio: c.ratio, intrinsic: c.intrinsic })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_profile, GeometryConstants};
    use crate::grid::{point, FieldIntegrator, ModelParams, SpaceTimeGrid};
    use crate::solver::Barenblatt;

    fn consts(params: &ModelParams) -> GeometryConstants {
        GeometryConstants::new(params, 0.25, 0.5, 0.5, 4.0).unwrap().with_s_grid(2f64.powf(0.125), 48).unwrap()
    }

    fn profile(fl: &EstimateFields, x: f64, t0: f64, c: &GeometryConstants) -> ScalingProfile {
        let up = fl.u.map("u_p", |v| v.max(0.0).powf(fl.m + 1.0));
        build_profile(&FieldIntegrator::new(&up), &point(&[x]), t0, c).unwrap()
    }

    #[test]
    fn constant_has_unit_constants() {
        let params = ModelParams::new(1, 0.5).unwrap();
        let g = SpaceTimeGrid::cube(1, 2.0, 128, (0.0, 2.0), 64).unwrap();
        let fl = EstimateFields::new(ScalarField::constant(g, 2.0, "u"), None, &params).unwrap();
        let c = consts(&params);
        let prof = profile(&fl, 0.0, 1.0, &c);
        let i = stored_index(&prof, 0.1).unwrap();
        let vc = vertex_cylinders(&fl, &prof, i, 4.0, 1.0).unwrap();
        for p in [0.5, 1.0, 1.5] {
            let r = sup_bound(&fl, &vc, p, 10.0).unwrap();
            assert!((r.empirical_constant.unwrap() - 1.0).abs() < 1e-12);
        }
        let rh = reverse_holder_u(&fl, &vc, 10.0).unwrap();
        assert!((rh.empirical_constant.unwrap() - 1.0).abs() < 1e-12);
        assert!(rh.pass);
    }

    #[test]
    fn barenblatt_sup_bound_decreases_in_p() {
        let params = ModelParams::new(1, 0.5).unwrap();
        let g = SpaceTimeGrid::cube(1, 3.0, 384, (1.0, 3.0), 128).unwrap();
        let u = Barenblatt::new(&params, 1.0).unwrap().sample(&g).unwrap();
        let fl = EstimateFields::new(u, None, &params).unwrap();
        let c = consts(&params);
        let prof = profile(&fl, 0.0, 2.0, &c);
        let i = stored_index(&prof, 0.2).unwrap();
        let vc = vertex_cylinders(&fl, &prof, i, 4.0, 1.0).unwrap();
        let gammas: Vec<f64> =
            [0.5, 1.0, 1.5].iter().map(|&p| sup_bound(&fl, &vc, p, 10.0).unwrap().empirical_constant.unwrap()).collect();
        assert!(gammas[0] >= gammas[1] && gammas[1] >= gammas[2] && gammas[2] >= 1.0, "{gammas:?}");
        let rh = reverse_holder_u(&fl, &vc, 10.0).unwrap();
        assert!(rh.pass && rh.side_checks.values().all(|b| *b));
        let checks = intrinsic_consistency(&fl.u, &prof, i, &[1.25, 1.5, 2.0], 4.0).unwrap();
        assert!(checks.iter().all(|c| c.intrinsic));
    }

    #[test]
    fn source_smallness_is_enforced() {
        let params = ModelParams::new(1, 0.5).unwrap();
        let g = SpaceTimeGrid::cube(1, 2.0, 128, (0.0, 2.0), 64).unwrap();
        let u = ScalarField::constant(g, 1.0, "u");
        let fl = EstimateFields::new(u, Some(ScalarField::constant(g, 100.0, "f")), &params).unwrap();
        let c = consts(&params);
        let prof = profile(&fl, 0.0, 1.0, &c);
        let i = stored_index(&prof, 0.1).unwrap();
        assert!(matches!(vertex_cylinders(&fl, &prof, i, 4.0, 1.0), Err(Error::FSmallnessFails { .. })));
    }
}
