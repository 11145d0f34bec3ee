use rand::Rng;

use crate::cli::{Record, SuiteContext};
use crate::error::{Error, Result};
use crate::estimates::{
    energy_estimate, grad_reverse_holder, higher_integrability_probe, regime_classify, reverse_holder_u, subintrinsic_energy, sup_bound,
    time_mean_switch, truncation_energy, vertex_cylinders, EnergyVariant, EstimateFields, EtaPower, HigherIntegrabilityProbe,
    ProbeRegion, RegimeLabel, ZetaSpec,
};
use crate::geometry::{build_profile, ScalingProfile};
use crate::grid::{point, slice_mean, FieldIntegrator, SpaceTimeGrid};
use crate::reduce::relative_change;
use crate::solver::Barenblatt;

const ENERGY: &str = "energy";
const SUP: &str = "sup";
const REGIME: &str = "regime";
const PROBE: &str = "probe";

/// Regime thresholds ε of the reverse Hölder suite; the smaller one populates the degenerate regime.
const EPSILONS: [f64; 2] = [0.1, 0.005];
/// Reverse Hölder exponent ϑ.
const VARTHETA: f64 = 0.75;

/// One-dimensional Barenblatt fields on [−3, 3] × [t₀, t₁] with 128·2^level cells.
fn barenblatt_fields(ctx: &SuiteContext, level: usize, t_range: (f64, f64), steps_per_level: usize) -> Result<EstimateFields> {
    let m = ctx.manifest;
    let params = m.params_in(1)?;
    let f = 1usize << level;
    let g = SpaceTimeGrid::cube(1, 3.0, 128 * f, t_range, steps_per_level * f)?;
    let u = Barenblatt::new(&params, m.model.barenblatt_c)?.sample(&g)?;
    EstimateFields::new(u, None, &params)
}

fn power_profile(ctx: &SuiteContext, fl: &EstimateFields, x: f64, t0: f64) -> Result<ScalingProfile> {
    let consts = ctx.manifest.geometry_constants(1)?;
    let up = fl.u.map("u_power", |v| v.max(0.0).powf(fl.m + 1.0));
    build_profile(&FieldIntegrator::new(&up), &point(&[x]), t0, &consts)
}

/// Energy, sub-intrinsic energy and truncated energy constants on the Barenblatt solution.
pub fn energy_suite(ctx: &SuiteContext) -> Result<Vec<Record>> {
    let fl = barenblatt_fields(ctx, ctx.level, (1.0, 3.0), 64)?;
    let tol = ctx.tol("energy.constant");
    let (m, k_intr) = (fl.m, ctx.manifest.geometry.k_intr);
    let mut out = Vec::new();
    for x0 in [0.0, 0.4, 0.8] {
        let x = point(&[x0]);
        let c_mean = slice_mean(&fl.u, 2.0, &x, 0.5)?;
        for (tag, c) in [("zero", 0.0), ("mean", c_mean)] {
            for v in [EnergyVariant::Full, EnergyVariant::Modified] {
                let r = energy_estimate(&fl, &x, 2.0, 0.5, 1.0, c, v, tol)?;
                out.push(Record::from_report(ENERGY, format!("x={x0},c={tag}"), &r));
            }
        }
        let theta = 2.0 * Barenblatt::new(&ctx.manifest.params_in(1)?, ctx.manifest.model.barenblatt_c)?.value(&x, 2.0).powf(1.0 - m);
        let r = subintrinsic_energy(&fl, &x, 2.0, 0.5, theta, k_intr, tol)?;
        out.push(Record::from_report(ENERGY, format!("x={x0}"), &r));
        let level = 0.5 * Barenblatt::new(&ctx.manifest.params_in(1)?, ctx.manifest.model.barenblatt_c)?.value(&x, 2.5);
        let r = truncation_energy(&fl, &x, 2.5, 0.5, 1.0, level, ZetaSpec::default(), tol)?;
        out.push(Record::from_report(ENERGY, format!("x={x0}"), &r));
    }
    Ok(out)
}

/// Sup bounds and the reverse Hölder inequality for u on vertex cylinders of stored intrinsic heights.
pub fn sup_suite(ctx: &SuiteContext) -> Result<Vec<Record>> {
    let fl = barenblatt_fields(ctx, ctx.level, (1.0, 3.0), 64)?;
    let tol = ctx.tol("sup.constant");
    let k_intr = ctx.manifest.geometry.k_intr;
    let mut out = Vec::new();
    let mut built = 0usize;
    let mut skipped = 0usize;
    for t_o in [2.0, 2.4] {
        for x0 in [-0.6, -0.3, 0.0, 0.3, 0.6] {
            let prof = power_profile(ctx, &fl, x0, t_o)?;
            let top = prof.len() - 1;
            for j in 1..=4 {
                let Some(i) = top.checked_sub(8 * j) else { continue };
                let vc = match vertex_cylinders(&fl, &prof, i, k_intr, 1.0) {
                    Ok(vc) => vc,
                    Err(Error::NotIntrinsic { .. } | Error::AmbientOutsideDomain(_) | Error::ProfileMissing(_)) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                built += 1;
                let key = format!("x={x0},t={t_o},s={:.6}", prof.s[i]);
                for p in [1.0, 2.0] {
                    out.push(Record::from_report(SUP, key.clone(), &sup_bound(&fl, &vc, p, tol)?));
                }
                let rh = reverse_holder_u(&fl, &vc, tol)?;
                let jensen = rh.side_checks.values().all(|b| *b);
                out.push(Record::from_report(SUP, key.clone(), &rh));
                out.push(Record::new(SUP, "jensen", key, if jensen { 1.0 } else { 0.0 }, 1.0, jensen));
            }
        }
    }
    let need = ctx.tol("sup.min_cylinders");
    out.push(Record::new(SUP, "intrinsic_cylinders", format!("skipped={skipped}"), built as f64, need, built as f64 >= need));
    Ok(out)
}

/// Regime labels, gradient reverse Hölder constants per regime, and the time-mean switch.
pub fn regime_suite(ctx: &SuiteContext) -> Result<Vec<Record>> {
    let fl = barenblatt_fields(ctx, ctx.level, (0.5, 4.5), 128)?;
    let tol = ctx.tol("regime.constant");
    let k_intr = ctx.manifest.geometry.k_intr;
    let m = fl.m;
    let mut out = Vec::new();
    let mut labelled = 0usize;
    let mut failures = 0usize;
    for (phase, t_o) in [("early", 1.0), ("late", 4.0)] {
        for x0 in [0.0, 0.5, 1.0] {
            let prof = power_profile(ctx, &fl, x0, t_o)?;
            for i in (0..prof.len()).step_by(8) {
                if !prof.intrinsic[i] {
                    continue;
                }
                let q = prof.cylinder(i);
                for eps in EPSILONS {
                    let key = format!("{phase},x={x0},s={:.6},eps={eps}", prof.s[i]);
                    let reg = match regime_classify(&fl.u, &q, m, eps) {
                        Ok(r) => r,
                        Err(_) => {
                            failures += 1;
                            continue;
                        }
                    };
                    labelled += 1;
                    let code = match reg.label {
                        RegimeLabel::Degenerate => 1.0,
                        RegimeLabel::NonDegenerate => 0.0,
                    };
                    out.push(Record::new(REGIME, "regime_label", key.clone(), code, f64::INFINITY, true).tracked().with_detail(&reg));
                    match grad_reverse_holder(&fl, &q, reg.label, VARTHETA, eps, k_intr, tol) {
                        Ok((r, _)) => out.push(Record::from_report(REGIME, key, &r)),
                        Err(Error::AmbientOutsideDomain(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    out.push(Record::at_most(REGIME, "classifier_failures", format!("labelled={labelled}"), failures as f64, 0.0));

    let (x, t0, s, r) = (point(&[0.3]), 2.5, 0.25, 0.5);
    let pairs = ctx.tol("regime.time_pairs") as usize;
    let mut rng = ctx.rng(REGIME, 0);
    let mut constants = Vec::with_capacity(pairs);
    for j in 0..pairs {
        let a: f64 = rng.gen_range(t0 - 2.0 * s..t0 + 2.0 * s);
        let b = rng.gen_range(t0 - 2.0 * s..t0 + 2.0 * s);
        let (sigma, tau) = (a.min(b), a.max(b));
        let rep = time_mean_switch(&fl, &x, t0, s, r, sigma, tau, EtaPower::Square, tol)?;
        let c = rep.constant_or_zero();
        constants.push(c);
        let mut rec = Record::from_report(REGIME, format!("pair{j}"), &rep);
        rec.tracked = false;
        out.push(rec.with_detail(&serde_json::json!({ "sigma": sigma, "tau": tau, "report": rep })));
    }
    let all = constants.iter().copied().fold(0.0, f64::max);
    let half = constants[..pairs / 2].iter().copied().fold(0.0, f64::max);
    let change = relative_change(half, all);
    out.push(Record::at_most(REGIME, "time_switch_sample_stability", "half_vs_all", change, ctx.tol("regime.switch_stability")));
    out.push(Record::at_most(REGIME, "time_switch_max", "all", all, tol).tracked());
    Ok(out)
}

/// Higher-integrability ratios on interior cylinders at two consecutive refinements.
pub fn probe_suite(ctx: &SuiteContext) -> Result<Vec<Record>> {
    let levels = vec![barenblatt_fields(ctx, ctx.level, (1.0, 3.0), 32)?, barenblatt_fields(ctx, ctx.level + 1, (1.0, 3.0), 32)?];
    let p_list = vec![1.05, 1.1, 1.2];
    let regions = [
        ("subintrinsic", ProbeRegion::SubIntrinsic { center: point(&[0.3]), t0: 2.0, s: 0.5, theta_o: 1.0, c_bound: 4.0 }),
        ("parabolic", ProbeRegion::Parabolic { center: point(&[0.3]), t0: 2.0, r: 0.5 }),
    ];
    let tol = ctx.tol("probe.change");
    let mut out = Vec::new();
    for (tag, region) in regions {
        let probe = HigherIntegrabilityProbe::new(p_list.clone(), region)?;
        let table = higher_integrability_probe(&levels, &probe)?;
        for v in &table.verdicts {
            let ok = v.finest_change < tol;
            out.push(Record::new(PROBE, "bounded", format!("{tag},p={}", v.p), v.finest_change, tol, ok).with_detail(&v));
        }
        for row in table.rows.iter().filter(|r| r.level == 1) {
            out.push(Record::new(PROBE, "ratio", format!("{tag},p={}", row.p), row.ratio, f64::INFINITY, row.ratio.is_finite()).tracked());
        }
    }
    Ok(out)
}
