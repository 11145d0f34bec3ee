use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{
    box_maximal_at, check_cover, classify_and_dilate, node_volume, stopping_cylinder, vitali_select, CaseLabel, CoverCheck,
    CoveringConfig, FamilyMeans, MaximalField, ProfileFamily, StoppingCylinder, VitaliItem,
};
use crate::error::{Error, Result};
use crate::grid::{cylinder_mean, point, Cylinder, FieldIntegrator, Point, ScalarField};

/// Q_{ρ,ρ} = (−ρ, ρ) × B_ρ about the origin.
pub fn unit_cylinder(n: usize, rho: f64) -> Cylinder {
    Cylinder::centered(point(&vec![0.0; n]), 0.0, rho, rho)
}

fn check_range(a: f64, b: f64) -> Result<()> {
    if !(0.5 <= a && a < b && b <= 1.0) {
        return Err(Error::BadRange(format!("need 1/2 <= a < b <= 1, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// μ_{a,b} = c C(f̃) / (b − a)^τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuThreshold {
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    /// ⨍⨍_{Q_{2,2}} f̃² + (⨍⨍_{Q_{2,2}} ũ^{m+1})^{2m/(m+1)}.
    pub c_base: f64,
    pub constant: f64,
    pub mu: f64,
}

/// Threshold of the large-cylinder lemma with τ = max(â, 1) n + 1/b̂.
pub fn mu_threshold(a: f64, b: f64, u: &ScalarField, f: &ScalarField, family: &ProfileFamily, constant: f64) -> Result<MuThreshold> {
    check_range(a, b)?;
    let consts = &family.consts;
    let m = consts.m;
    let q22 = unit_cylinder(u.grid.n, 2.0);
    let f2 = cylinder_mean(f, &q22, 2.0)?;
    let um = cylinder_mean(u, &q22, m + 1.0)?;
    let c_base = f2 + um.powf(2.0 * m / (m + 1.0));
    let tau = consts.tau_exponent();
    Ok(MuThreshold { a, b, tau, c_base, constant, mu: constant * c_base / (b - a).powf(tau) })
}

/// Whether the stored cylinder at height ≥ h around base point p leaves Q_{b,b}.
fn escapes(family: &ProfileFamily, p: usize, h: f64, b: f64) -> bool {
    let prof = &family.profiles[p];
    let n = family.grid.n;
    match prof.s.iter().position(|&s| s >= h * (1.0 - 1e-9)) {
        None => true,
        Some(j) => !unit_cylinder(n, b).contains_cylinder(n, &prof.cylinder(j)),
    }
}

/// Empirical constant of μ_{a,b} on one range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuSample {
    pub a: f64,
    pub b: f64,
    /// Largest mean over family cylinders Q(s, z) meeting Q_{a,a} whose dilation Q(c₂ s, z) leaves Q_{b,b}.
    pub max_escaping_mean: f64,
    /// The constant c making μ_{a,b} equal to that mean.
    pub constant: f64,
}

/// Smallest constant c for which the large-cylinder lemma holds on the stored family, per range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuCalibration {
    pub samples: Vec<MuSample>,
    /// Maximum over the ranges.
    pub constant: f64,
}

pub fn calibrate_mu_constant(
    ranges: &[(f64, f64)],
    u: &ScalarField,
    f: &ScalarField,
    family: &ProfileFamily,
    means: &FamilyMeans,
    cfg: &CoveringConfig,
) -> Result<MuCalibration> {
    let n = family.grid.n;
    let mut samples = Vec::new();
    for &(a, b) in ranges {
        let base = mu_threshold(a, b, u, f, family, 1.0)?;
        let qa = unit_cylinder(n, a);
        let mut best: f64 = 0.0;
        for p in 0..family.len() {
            let prof = &family.profiles[p];
            for i in 0..prof.len() {
                if prof.cylinder(i).intersects(n, &qa) && escapes(family, p, cfg.c_2 * prof.s[i], b) {
                    best = best.max(means.means[p][i]);
                }
            }
        }
        let constant = if base.c_base > 0.0 { best * (b - a).powf(base.tau) / base.c_base } else { 0.0 };
        samples.push(MuSample { a, b, max_escaping_mean: best, constant });
    }
    let constant = samples.iter().map(|s| s.constant).fold(0.0, f64::max);
    Ok(MuCalibration { samples, constant })
}

/// γ₁ θ_{2s}^{(m+1)/(1−m)}/(2s) ≤ λ/2 + M*(f̃²)(y) at a case 3 witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// One point of the level set with its completed stopping cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringRecord {
    pub node: usize,
    pub x: Point,
    pub t: f64,
    pub stop: StoppingCylinder,
    pub mean_q_z: f64,
    pub mean_q_star_star: f64,
    /// λ / ⨍⨍_{Q_z} F.
    pub lambda_ratio: f64,
    /// ⨍⨍_{Q_z} F / [(⨍⨍_{Q_z*} F^q)^{1/q} + M*(f̃²)(y)]; `None` for a zero denominator.
    pub reverse_holder: Option<f64>,
    pub box_maximal_f2: f64,
    /// Q_z** ⊂ Q_{b,b}.
    pub inside_qbb: bool,
    pub absorption: Option<AbsorptionCheck>,
}

/// Covering of O_λ ∩ Q_{a,a} by dilated stopping cylinders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringResult {
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub records: Vec<CoveringRecord>,
    /// Indices into `records` of the disjoint cores, in selection order.
    pub selected: Vec<usize>,
    /// Vitali check over the cores Q_z* and dilations Q_z**.
    pub vitali: CoverCheck,
    pub level_set_nodes: usize,
    /// Level-set nodes outside every selected Q_z**.
    pub uncovered_level_nodes: usize,
    pub level_set_measure: f64,
    /// Σ |Q_i*| over the selection.
    pub core_measure_sum: f64,
    /// level_set_measure / core_measure_sum.
    pub covering_constant: f64,
    pub case_histogram: [usize; 3],
    pub max_size_ratio: f64,
    /// Records with ⨍⨍_{Q**} F > 2λ.
    pub mean_bound_violations: usize,
    /// Records with Q** ⊄ Q_{b,b}.
    pub guard_violations: usize,
    /// Records whose witness has an ancestor above 2λ.
    pub ancestor_violations: usize,
    pub max_lambda_ratio: f64,
    pub max_reverse_holder: f64,
    pub absorption_failures: usize,
    pub case3_count: usize,
}

impl CoveringResult {
    /// Selected cores pairwise disjoint, level set covered, and ⨍⨍_{Q**} F ≤ 2λ throughout.
    pub fn properties_hold(&self) -> bool {
        self.vitali.disjoint && self.uncovered_level_nodes == 0 && self.mean_bound_violations == 0 && self.ancestor_violations == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("covering result serializes")
    }
}

/// Covers O_λ ∩ Q_{a,a} = {M(F) > λ} ∩ Q_{a,a}.
#[allow(clippy::too_many_arguments)]
pub fn cover_level_set(
    f_energy: &ScalarField,
    u: &ScalarField,
    f_source: &ScalarField,
    family: &ProfileFamily,
    means: &FamilyMeans,
    maximal: &MaximalField,
    lambda: f64,
    a: f64,
    b: f64,
    cfg: &CoveringConfig,
) -> Result<CoveringResult> {
    check_range(a, b)?;
    let grid = family.grid;
    let n = grid.n;
    let ns = grid.space_nodes();
    let qa = unit_cylinder(n, a);
    let qb = unit_cylinder(n, b);
    let level: Vec<usize> = (0..grid.node_count())
        .filter(|&node| maximal.values[node] > lambda && qa.contains(n, &grid.node_point(node % ns), grid.time(node / ns)))
        .collect();
    let fi = FieldIntegrator::new(f_energy);
    let f2 = f_source.map("f2", |v| v * v);
    let source_zero = f2.values.iter().all(|v| *v == 0.0);
    let stops: Vec<(usize, StoppingCylinder)> = level
        .par_iter()
        .map(|&node| {
            let (x, t) = (grid.node_point(node % ns), grid.time(node / ns));
            let w = stopping_cylinder(family, means, &x, t, lambda)
                .ok_or_else(|| Error::HypothesisUnmet(format!("node {node} lies in the level set without a witness")))?;
            Ok((node, classify_and_dilate(&w, u, family, cfg)?))
        })
        .collect::<Result<_>>()?;
    let mut mstar: BTreeMap<usize, f64> = BTreeMap::new();
    if !source_zero {
        let profiles: Vec<usize> = {
            let mut v: Vec<usize> = stops.iter().map(|s| s.1.witness.profile).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let vals: Vec<f64> = profiles
            .par_iter()
            .map(|&p| {
                let prof = &family.profiles[p];
                let mut idx = [0usize; crate::grid::MAX_DIM];
                for ax in 0..n {
                    idx[ax] = grid.nearest_axis_index(ax, prof.center[ax]);
                }
                let node = grid.node_index(grid.nearest_time_index(prof.t0), grid.spatial_index(idx));
                box_maximal_at(&f2, node, cfg.box_mode)
            })
            .collect();
        mstar.extend(profiles.into_iter().zip(vals));
    }
    let m = cfg.m;
    let records: Vec<CoveringRecord> = stops
        .par_iter()
        .map(|&(node, stop)| {
            let mean_q_z = fi.mean(&stop.q_z)?;
            let mean_q_star_star = fi.mean(&stop.q_star_star)?;
            let ms = mstar.get(&stop.witness.profile).copied().unwrap_or(0.0);
            let rh_mean = cylinder_mean(f_energy, &stop.q_star, cfg.vartheta)?.powf(1.0 / cfg.vartheta);
            let den = rh_mean + ms;
            let absorption = (stop.case == CaseLabel::Case3NeverIntrinsic).then(|| {
                let lhs = cfg.gamma_1 * stop.theta_2s.powf((m + 1.0) / (1.0 - m)) / (2.0 * stop.witness.s);
                let rhs = 0.5 * lambda + ms;
                AbsorptionCheck { lhs, rhs, holds: lhs <= rhs }
            });
            Ok(CoveringRecord {
                node,
                x: grid.node_point(node % ns),
                t: grid.time(node / ns),
                stop,
                mean_q_z,
                mean_q_star_star,
                lambda_ratio: if mean_q_z > 0.0 { lambda / mean_q_z } else { f64::INFINITY },
                reverse_holder: (den > 0.0).then(|| mean_q_z / den),
                box_maximal_f2: ms,
                inside_qbb: qb.contains_cylinder(n, &stop.q_star_star),
                absorption,
            })
        })
        .collect::<Result<_>>()?;
    let items: Vec<VitaliItem> = records
        .iter()
        .map(|r| VitaliItem { core: r.stop.q_star, dilated: r.stop.q_star_star, key: r.stop.star_height })
        .collect();
    let selected = vitali_select(n, &items);
    let vitali = check_cover(&grid, &items, &selected);
    let uncovered_level_nodes = records
        .iter()
        .filter(|r| !selected.iter().any(|&i| items[i].dilated.contains(n, &r.x, r.t)))
        .count();
    let level_set_measure: f64 = level.iter().map(|&node| node_volume(&grid, node)).sum();
    let core_measure_sum: f64 = selected.iter().map(|&i| items[i].core.measure(n)).sum();
    let mut case_histogram = [0usize; 3];
    for r in &records {
        case_histogram[r.stop.case.index()] += 1;
    }
    Ok(CoveringResult {
        lambda,
        a,
        b,
        level_set_nodes: level.len(),
        uncovered_level_nodes,
        level_set_measure,
        core_measure_sum,
        covering_constant: if core_measure_sum > 0.0 { level_set_measure / core_measure_sum } else { 0.0 },
        case_histogram,
        max_size_ratio: records.iter().map(|r| r.stop.size_ratio).fold(0.0, f64::max),
        mean_bound_violations: records.iter().filter(|r| r.mean_q_star_star > 2.0 * lambda).count(),
        guard_violations: records.iter().filter(|r| !r.inside_qbb).count(),
        ancestor_violations: records.iter().filter(|r| !r.stop.witness.ancestors_ok).count(),
        max_lambda_ratio: records.iter().map(|r| r.lambda_ratio).fold(0.0, f64::max),
        max_reverse_holder: records.iter().filter_map(|r| r.reverse_holder).fold(0.0, f64::max),
        absorption_failures: records.iter().filter(|r| r.absorption.is_some_and(|c| !c.holds)).count(),
        case3_count: case_histogram[2],
        selected,
        vitali,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{intrinsic_maximal, unit_energy_field, unit_grid};
    use crate::geometry::GeometryConstants;
    use crate::grid::ModelParams;

    fn setup(u: &ScalarField) -> (ProfileFamily, CoveringConfig) {
        let consts = GeometryConstants::new(&ModelParams::new(1, 0.5).unwrap(), 0.25, 1.0, 1.0, 4.0)
            .unwrap()
            .with_s_grid(2f64.powf(0.25), 80)
            .unwrap();
        let fam = ProfileFamily::build(u, &consts, 4).unwrap();
        (fam, CoveringConfig::new(&consts, 2.0, 9.0, 0.25).unwrap())
    }

    #[test]
    fn mu_formula_and_range() {
        let g = unit_grid(1, 32, 32).unwrap();
        let u = ScalarField::constant(g, 1.0, "u");
        let (fam, _) = setup(&u);
        let zero = ScalarField::zeros(g, "f");
        let mu = mu_threshold(0.5, 1.0, &u, &zero, &fam, 3.0).unwrap();
        // τ = max(â, 1)·1 + 1/b̂ with â = 0.25 + 2/(3 − 0.5) = 1.05.
        assert!((mu.tau - 5.05).abs() < 1e-12);
        assert!((mu.c_base - 1.0).abs() < 1e-12);
        assert!((mu.mu - 3.0 * 2f64.powf(5.05)).abs() < 1e-9);
        assert!(matches!(mu_threshold(0.4, 1.0, &u, &zero, &fam, 1.0), Err(Error::BadRange(_))));
        assert!(matches!(mu_threshold(0.8, 0.7, &u, &zero, &fam, 1.0), Err(Error::BadRange(_))));
    }

    #[test]
    fn level_above_maximum_is_empty() {
        let g = unit_grid(1, 64, 32).unwrap();
        let u = ScalarField::from_fn(g, "u", |x, t| 1.0 + 0.3 * (3.0 * x[0] - t).sin());
        let (fam, cfg) = setup(&u);
        let f = unit_energy_field(&u, 0.5);
        let means = fam.means_of(&FieldIntegrator::new(&f)).unwrap();
        let mx = intrinsic_maximal(&fam, &means);
        let zero = ScalarField::zeros(g, "f");
        let res = cover_level_set(&f, &u, &zero, &fam, &means, &mx, mx.max() * 1.01, 0.5, 1.0, &cfg).unwrap();
        assert_eq!(res.level_set_nodes, 0);
        assert!(res.selected.is_empty() && res.properties_hold());
    }

    #[test]
    fn constant_energy_below_threshold_escapes() {
        let g = unit_grid(1, 32, 32).unwrap();
        let u = ScalarField::constant(g, 1.0, "u");
        let (fam, cfg) = setup(&u);
        let f = ScalarField::constant(g, 2.0, "F");
        let means = fam.means_of(&FieldIntegrator::new(&f)).unwrap();
        let mx = intrinsic_maximal(&fam, &means);
        let zero = ScalarField::zeros(g, "f");
        let err = cover_level_set(&f, &u, &zero, &fam, &means, &mx, 1.0, 0.5, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::DilationEscapesDomain { .. }));
        let cal = calibrate_mu_constant(&[(0.5, 1.0)], &u, &zero, &fam, &means, &cfg).unwrap();
        let mu = mu_threshold(0.5, 1.0, &u, &zero, &fam, cal.constant).unwrap();
        assert!((mu.mu - 2.0).abs() < 1e-9, "{cal:?} {mu:?}");
    }

    #[test]
    fn bump_energy_is_covered() {
        let g = unit_grid(1, 256, 64).unwrap();
        let u = ScalarField::from_fn(g, "u", |x, t| 1.0 + 0.5 * (-(x[0] - 0.1 * t).powi(2) / 0.002).exp());
        let consts = GeometryConstants::new(&ModelParams::new(1, 0.5).unwrap(), 0.25, 1.0, 1.0, 4.0)
            .unwrap()
            .with_s_grid(2f64.powf(0.25), 80)
            .unwrap();
        let fam = ProfileFamily::build(&u, &consts, 1).unwrap();
        let cfg = CoveringConfig::new(&consts, 0.26, 9.0, 0.25).unwrap();
        let f = unit_energy_field(&u, 0.5);
        let means = fam.means_of(&FieldIntegrator::new(&f)).unwrap();
        let mx = intrinsic_maximal(&fam, &means);
        let zero = ScalarField::zeros(g, "f");
        let cal = calibrate_mu_constant(&[(0.5, 1.0)], &u, &zero, &fam, &means, &cfg).unwrap();
        let mu = mu_threshold(0.5, 1.0, &u, &zero, &fam, cal.constant).unwrap().mu;
        let qa = unit_cylinder(1, 0.5);
        let ns = g.space_nodes();
        let top = (0..g.node_count())
            .filter(|&k| qa.contains(1, &g.node_point(k % ns), g.time(k / ns)))
            .map(|k| mx.values[k])
            .fold(0.0, f64::max);
        assert!(mu < top, "mu {mu} top {top}");
        let lambda = mu + 0.5 * (top - mu);
        let res = cover_level_set(&f, &u, &zero, &fam, &means, &mx, lambda, 0.5, 1.0, &cfg).unwrap();
        assert!(res.level_set_nodes > 0);
        assert!(res.properties_hold(), "{:?}", (res.vitali, res.uncovered_level_nodes, res.mean_bound_violations));
        assert!(res.to_json().contains("CASE"));
    }

}
