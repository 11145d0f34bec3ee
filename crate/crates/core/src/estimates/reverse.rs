use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::fields::{average, ensure_inside, support_max, weighted_slice_integral};
use crate::estimates::{regime_classify, EstimateFields, InequalityReport, Regime, RegimeLabel};
use crate::geometry::check_intrinsic;
use crate::grid::{dist, Cylinder, Point};

/// Gradient reverse Hölder inequality on an intrinsic cylinder `q` = (t₀ ± s/2) × B_r.
///
/// Degenerate: ⨍⨍_q F against Q_{3s,3r}. Non-degenerate: `q` plays Q_{2s}, and the left side
/// runs over half its height at the same radius.
#[allow(clippy::too_many_arguments)]
pub fn grad_reverse_holder(
    fl: &EstimateFields,
    q: &Cylinder,
    expected: RegimeLabel,
    vartheta: f64,
    epsilon: f64,
    k_intr: f64,
    tolerance: f64,
) -> Result<(InequalityReport, Regime)> {
    if !(vartheta > 0.0 && vartheta < 1.0) {
        return Err(Error::InvalidExponent(format!("vartheta = {vartheta} must lie in (0, 1)")));
    }
    let g = fl.grid();
    let m = fl.m;
    let s = q.height();
    let r = q.radius;
    let chk = check_intrinsic(&fl.u, q, m, s / (r * r), k_intr)?;
    if !chk.intrinsic {
        return Err(Error::NotIntrinsic { ratio: chk.ratio, k: k_intr });
    }
    let regime = regime_classify(&fl.u, q, m, epsilon)?;
    if regime.label != expected {
        return Err(Error::RegimeMismatch);
    }
    let (en, f) = (&fl.energy.values, &fl.f.values);
    let report = match expected {
        RegimeLabel::Degenerate => {
            let big = Cylinder::construction(q.center, q.t0, 3.0 * s, 3.0 * r);
            ensure_inside(g, &big)?;
            let lhs = average(g, q, |n| en[n])?;
            let pm = average(g, &big, |n| en[n].powf(vartheta))?.powf(1.0 / vartheta);
            let src = support_max(g, &big, |n| r * r * f[n] * f[n])?;
            InequalityReport::new("grad_reverse_holder_degenerate", lhs, &[("power_mean", pm), ("source_sup", src)], tolerance)
                .with_cylinder("q_s", *q)
                .with_cylinder("q_3s", big)
        }
        RegimeLabel::NonDegenerate => {
            ensure_inside(g, q)?;
            let inner = Cylinder::construction(q.center, q.t0, 0.5 * s, r);
            let lhs = average(g, &inner, |n| en[n])?;
            let pm = average(g, q, |n| en[n].powf(vartheta))?.powf(1.0 / vartheta);
            let src = average(g, q, |n| r * r * f[n] * f[n])?;
            InequalityReport::new("grad_reverse_holder_non_degenerate", lhs, &[("power_mean", pm), ("source_mean", src)], tolerance)
                .with_cylinder("q_s", inner)
                .with_cylinder("q_2s", *q)
        }
    };
    Ok((report, regime))
}

/// Spatial weight of the time-mean switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EtaPower {
    /// Weight η².
    Square,
    /// Weight η.
    Linear,
}

/// |⟨u(τ)⟩ − ⟨u(σ)⟩| with a cutoff weight on B_{2r} against s((1/r)⨍⨍|Du^m| + ⨍⨍|f|) on Q_{2s,2r}.
#[allow(clippy::too_many_arguments)]
pub fn time_mean_switch(
    fl: &EstimateFields,
    center: &Point,
    t0: f64,
    s: f64,
    r: f64,
    sigma: f64,
    tau: f64,
    power: EtaPower,
    tolerance: f64,
) -> Result<InequalityReport> {
    let g = fl.grid();
    let q = Cylinder::centered(*center, t0, 2.0 * s, 2.0 * r);
    ensure_inside(g, &q)?;
    let (a, b) = q.time_interval();
    if !(a <= sigma && sigma < tau && tau <= b) {
        return Err(Error::HypothesisUnmet(format!("need {a} <= sigma < tau <= {b}, got {sigma}, {tau}")));
    }
    let n = g.n;
    let eta = |x: &Point| {
        let e = ((2.0 * r - dist(n, x, center)) / r).clamp(0.0, 1.0);
        match power {
            EtaPower::Square => e * e,
            EtaPower::Linear => e,
        }
    };
    let u = &fl.u.values;
    let norm = weighted_slice_integral(g, 0, center, 2.0 * r, |_| 1.0, eta);
    let slice = |t: f64| weighted_slice_integral(g, g.nearest_time_index(t), center, 2.0 * r, |i| u[i], eta) / norm;
    let lhs = (slice(tau) - slice(sigma)).abs();
    let (en, f) = (&fl.energy.values, &fl.f.values);
    let grad = s / r * average(g, &q, |i| en[i].sqrt())?;
    let src = s * average(g, &q, |i| f[i].abs())?;
    let name = match power {
        EtaPower::Square => "time_mean_switch_square",
        EtaPower::Linear => "time_mean_switch_linear",
    };
    Ok(InequalityReport::new(name, lhs, &[("gradient_term", grad), ("source_term", src)], tolerance).with_cylinder("q_2s_2r", q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{point, ModelParams, ScalarField, SpaceTimeGrid};

    #[test]
    fn constant_gives_degenerate_outcome() {
        let params = ModelParams::new(1, 0.5).unwrap();
        let g = SpaceTimeGrid::cube(1, 2.0, 64, (0.0, 2.0), 32).unwrap();
        let fl = EstimateFields::new(ScalarField::constant(g, 1.0, "u"), None, &params).unwrap();
        let q = Cylinder::construction(point(&[0.0]), 1.0, 0.25, 0.5);
        let (r, reg) = grad_reverse_holder(&fl, &q, RegimeLabel::NonDegenerate, 0.75, 0.1, 4.0, 10.0).unwrap();
        assert_eq!(reg.label, RegimeLabel::NonDegenerate);
        assert_eq!(r.outcome, crate::estimates::Outcome::Degenerate);
        let err = grad_reverse_holder(&fl, &q, RegimeLabel::Degenerate, 0.75, 0.1, 4.0, 10.0).unwrap_err();
        assert_eq!(err, Error::RegimeMismatch);
    }

    #[test]
    fn linear_heat_limit_has_unit_constant() {
        let params = ModelParams::heat_limit(1);
        let g = SpaceTimeGrid::cube(1, 2.0, 64, (0.0, 2.0), 32).unwrap();
        let u = ScalarField::from_fn(g, "u", |x, _| 3.0 + 0.5 * x[0]);
        let fl = EstimateFields::new(u, None, &params).unwrap();
        let q = Cylinder::construction(point(&[0.0]), 1.0, 0.25, 0.5);
        let label = regime_classify(&fl.u, &q, 1.0, 0.1).unwrap().label;
        let (r, _) = grad_reverse_holder(&fl, &q, label, 0.75, 0.1, 4.0, 10.0).unwrap();
        assert!((r.lhs - 0.25).abs() < 1e-12);
        assert!((r.rhs_terms["power_mean"] - 0.25).abs() < 1e-12);
        assert!((r.empirical_constant.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn time_switch_matches_source_in_model_case() {
        let params = ModelParams::new(1, 0.5).unwrap();
        let g = SpaceTimeGrid::cube(1, 2.0, 64, (1.0, 3.0), 64).unwrap();
        let fl = EstimateFields::new(
            ScalarField::from_fn(g, "u", |_, t| t),
            Some(ScalarField::constant(g, 1.0, "f")),
            &params,
        )
        .unwrap();
        for power in [EtaPower::Square, EtaPower::Linear] {
            let r = time_mean_switch(&fl, &point(&[0.0]), 2.0, 0.25, 0.5, 1.5, 2.25, power, 4.0).unwrap();
            assert!((r.lhs - 0.75).abs() < 1e-12);
            assert!((r.rhs_sum - 0.25).abs() < 1e-12);
            assert!(r.pass);
        }
        let still = EstimateFields::new(ScalarField::constant(g, 2.0, "u"), None, &params).unwrap();
        let r = time_mean_switch(&still, &point(&[0.0]), 2.0, 0.25, 0.5, 1.5, 2.25, EtaPower::Square, 4.0).unwrap();
        assert_eq!(r.lhs, 0.0);
    }
}
