use serde::{Deserialize, Serialize};

use crate::geometry::ScalingProfile;

/// Default multiplicative slack c(n, p) allowed in the scale-power properties.
pub const DEFAULT_SLACK: f64 = 2.0;

/// Pass/fail and measured slack of every property of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    /// max |r²θ − s|/s.
    pub a_max_rel: f64,
    pub a_pass: bool,
    /// Pairs violating r(s) ≤ (s/σ)^b̂ r(σ) or monotonicity.
    pub b_violations: usize,
    /// max ⨍⨍|f| / λ^p − 1 (≤ 0 means exact).
    pub c_max_excess: f64,
    pub c_pass: bool,
    pub d_pairs: usize,
    pub d_violations: usize,
    pub e_checks: usize,
    pub e_violations: usize,
    /// Slack constants of the three scale bounds (radius, measure, θ).
    pub f_slack: [f64; 3],
    pub f_pass: bool,
    /// max r(c̃s) / (c̄ r(s)) over the nesting chain.
    pub g_slack: f64,
    pub g_violations: usize,
    pub g_pass: bool,
    /// Slack of r(γs) ≤ γ^b̂ r(s), γ^b̂ r(s) ≤ γ^{b̂−â} r(γs), θ_s ≤ γ^{2b̂−1}θ_{γs}, γ^{2b̂−1}θ_{γs} ≤ γ^{2(b̂−â)}θ_s.
    pub eq_r_slack: [f64; 4],
    /// max relative jump of r̃ between neighbouring heights.
    pub continuity_jump: f64,
    pub slack_bound: f64,
    pub all_pass: bool,
}

const REL: f64 = 1e-9;

/// Checks the nested-family properties on every pair of stored heights.
///
/// `gamma_steps` lists the ratios γ = q^{−g} (q the s-grid ratio) used for the
/// scale bounds; `slack` is the configured c(n, p).
pub fn verify_profile(prof: &ScalingProfile, gamma_steps: &[usize], slack: f64) -> ProfileReport {
    let c = &prof.consts;
    let len = prof.len();
    let s = &prof.s;
    let r = &prof.r;
    let theta = &prof.theta;
    let (b, a_hat, beta) = (c.b_hat, c.a_hat, c.beta);

    let a_max_rel = (0..len).map(|i| (r[i] * r[i] * theta[i] - s[i]).abs() / s[i]).fold(0.0, f64::max);
    let a_pass = a_max_rel <= 4.0 * f64::EPSILON;

    let mut b_violations = 0;
    for i in 0..len {
        if i + 1 < len && r[i] > r[i + 1] * (1.0 + REL) {
            b_violations += 1;
        }
        for j in i + 1..len {
            if r[i] > (s[i] / s[j]).powf(b) * r[j] * (1.0 + REL) {
                b_violations += 1;
            }
        }
    }

    let c_max_excess = (0..len).map(|i| prof.mean_f[i] / prof.lambda[i].powf(c.p) - 1.0).fold(f64::NEG_INFINITY, f64::max);
    let c_pass = c_max_excess <= 1e-6;

    // next_intrinsic[i] = smallest k ≥ i with an intrinsic flag, or len.
    let mut next_intrinsic = vec![len; len + 1];
    for i in (0..len).rev() {
        next_intrinsic[i] = if prof.intrinsic[i] { i } else { next_intrinsic[i + 1] };
    }
    let (mut d_pairs, mut d_violations) = (0, 0);
    for i in 0..len {
        for j in i + 1..len {
            if r[i] < (s[i] / s[j]).powf(b) * r[j] * (1.0 - REL) {
                d_pairs += 1;
                if next_intrinsic[i] >= j {
                    d_violations += 1;
                }
            }
        }
    }

    let (mut e_checks, mut e_violations) = (0, 0);
    for j in 1..len {
        let mut i = j - 1;
        loop {
            if prof.intrinsic[i] {
                break;
            }
            e_checks += 1;
            if theta[i] > (s[i] / s[j]).powf(beta) * theta[j] * (1.0 + REL) {
                e_violations += 1;
            }
            if i == 0 {
                break;
            }
            i -= 1;
        }
    }

    let n = c.n as f64;
    let vol = |i: usize| s[i] * r[i].powf(n);
    let mut f_slack: [f64; 3] = [0.0; 3];
    let mut eq_r_slack: [f64; 4] = [0.0; 4];
    for &g in gamma_steps {
        for i in g..len {
            let j = i - g;
            let gamma = s[j] / s[i];
            f_slack[0] = f_slack[0].max(r[i] * gamma.powf(a_hat) / r[j]);
            f_slack[1] = f_slack[1].max(vol(i) * gamma.powf(n * a_hat + 2.0) / vol(j));
            f_slack[2] = f_slack[2].max(theta[j] * gamma.powf((2.0 * a_hat).max(beta)) / theta[i]);
            eq_r_slack[0] = eq_r_slack[0].max(r[j] / (gamma.powf(b) * r[i]));
            eq_r_slack[1] = eq_r_slack[1].max(gamma.powf(b) * r[i] / (gamma.powf(b - a_hat) * r[j]));
            eq_r_slack[2] = eq_r_slack[2].max(theta[i] / (gamma.powf(2.0 * b - 1.0) * theta[j]));
            eq_r_slack[3] = eq_r_slack[3].max(gamma.powf(2.0 * b - 1.0) * theta[j] / (gamma.powf(2.0 * (b - a_hat)) * theta[i]));
        }
    }
    let f_pass = f_slack.iter().all(|v| *v <= slack);

    // Nesting chain with c̃ = q^k and c = c̃^b̂.
    let mut g_slack: f64 = 0.0;
    let mut g_violations = 0;
    for k in 1..len {
        let ct = s[k] / s[0];
        let cc = ct.powf(b);
        let cbar = ct.max(ct.powf(a_hat));
        for i in 0..len - k {
            let up = i + k;
            if cc * s[i] > s[up] * (1.0 + REL) || cc * r[i] > r[up] * (1.0 + REL) {
                g_violations += 1;
            }
            g_slack = g_slack.max(r[up] / (cbar * r[i]));
        }
    }
    let g_pass = g_violations == 0 && g_slack <= slack;

    let continuity_jump = (1..len)
        .map(|i| (prof.r_tilde[i] - prof.r_tilde[i - 1]).abs() / prof.r_tilde[i].max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);

    let all_pass = a_pass && b_violations == 0 && c_pass && d_violations == 0 && e_violations == 0 && f_pass && g_pass;
    ProfileReport {
        a_max_rel,
        a_pass,
        b_violations,
        c_max_excess,
        c_pass,
        d_pairs,
        d_violations,
        e_checks,
        e_violations,
        f_slack,
        f_pass,
        g_slack,
        g_violations,
        g_pass,
        eq_r_slack,
        continuity_jump,
        slack_bound: slack,
        all_pass,
    }
}

/// All γ steps 0, 1, …, max_step.
pub fn gamma_range(max_step: usize) -> Vec<usize> {
    (0..=max_step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_profile, GeometryConstants};
    use crate::grid::{point, FieldIntegrator, ModelParams, ScalarField, SpaceTimeGrid};

    #[test]
    fn constant_field_passes_with_unit_slack() {
        let g = SpaceTimeGrid::cube(2, 2.0, 64, (0.0, 4.0), 32).unwrap();
        let fi = FieldIntegrator::new(&ScalarField::constant(g, 1.0, "f"));
        let c = GeometryConstants::new(&ModelParams::new(2, 0.5).unwrap(), 0.25, 1.0, 1.0, 4.0)
            .unwrap()
            .with_s_grid(2f64.powf(0.125), 64)
            .unwrap();
        let prof = build_profile(&fi, &point(&[0.0, 0.0]), 2.0, &c).unwrap();
        let rep = verify_profile(&prof, &gamma_range(64), DEFAULT_SLACK);
        assert!(rep.all_pass, "{rep:?}");
        assert!(rep.f_slack[0] <= 1.0 + 1e-5, "{:?}", rep.f_slack);
        assert_eq!(rep.e_checks, 0);
    }

    #[test]
    fn identity_ratio_is_exact() {
        let g = SpaceTimeGrid::cube(1, 2.0, 64, (0.0, 4.0), 32).unwrap();
        let f = ScalarField::from_fn(g, "f", |x, t| 1.0 + x[0] * x[0] * t);
        let fi = FieldIntegrator::new(&f);
        let c = GeometryConstants::new(&ModelParams::new(1, 0.5).unwrap(), 0.25, 1.0, 1.0, 4.0).unwrap();
        let prof = build_profile(&fi, &point(&[0.2]), 2.0, &c).unwrap();
        let rep = verify_profile(&prof, &[0], DEFAULT_SLACK);
        assert_eq!(rep.f_slack, [1.0, 1.0, 1.0]);
    }
}
