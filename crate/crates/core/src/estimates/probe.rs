use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::fields::{average, ensure_inside};
use crate::estimates::EstimateFields;
use crate::grid::{Cylinder, Point};
use crate::reduce::relative_change;

/// Largest relative change between the two finest levels for a bounded verdict.
pub const BOUNDED_CHANGE: f64 = 0.2;

/// Cylinder on which higher integrability is probed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeRegion {
    /// (⨍⨍_{Q_{S,√(S/θ_o)}} u^{m+1})^{(1−m)/(m+1)} ≤ C θ_o, construction convention.
    SubIntrinsic { center: Point, t0: f64, s: f64, theta_o: f64, c_bound: f64 },
    /// Q_{R²,R} = (t₀ − R², t₀ + R²) × B_R with K = (⨍⨍ u^{m+1})^{1−m}.
    Parabolic { center: Point, t0: f64, r: f64 },
}

/// Exponents and region of a higher-integrability probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HigherIntegrabilityProbe {
    pub p_list: Vec<f64>,
    pub region: ProbeRegion,
}

impl HigherIntegrabilityProbe {
    pub fn new(p_list: Vec<f64>, region: ProbeRegion) -> Result<Self> {
        if p_list.is_empty() || p_list.iter().any(|&p| !(p > 1.0 && p <= 1.5)) {
            return Err(Error::InvalidExponent(format!("probe exponents must lie in (1, 1.5], got {p_list:?}")));
        }
        Ok(HigherIntegrabilityProbe { p_list, region })
    }
}

/// One exponent at one refinement level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub level: usize,
    pub h: f64,
    pub p: f64,
    pub lhs: f64,
    pub rhs_terms: BTreeMap<String, f64>,
    pub ratio: f64,
}

/// Refinement trend of one exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeVerdict {
    pub p: f64,
    /// Relative change of the ratio between the two finest levels.
    pub finest_change: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTable {
    pub probe: HigherIntegrabilityProbe,
    pub rows: Vec<ProbeRow>,
    pub verdicts: Vec<ProbeVerdict>,
}

fn probe_level(fl: &EstimateFields, region: &ProbeRegion, p: f64) -> Result<(f64, BTreeMap<String, f64>)> {
    let g = fl.grid();
    let m = fl.m;
    let (u, f, en) = (&fl.u.values, &fl.f.values, &fl.energy.values);
    let mut terms = BTreeMap::new();
    let lhs = match *region {
        ProbeRegion::SubIntrinsic { center, t0, s, theta_o, c_bound } => {
            let r = (s / theta_o).sqrt();
            let base = Cylinder::construction(center, t0, s, r);
            let double = Cylinder::construction(center, t0, 2.0 * s, 2.0 * r);
            ensure_inside(g, &double)?;
            let ratio = average(g, &base, |n| u[n].max(0.0).powf(m + 1.0))?.powf((1.0 - m) / (1.0 + m)) / theta_o;
            if ratio > c_bound {
                return Err(Error::NotSubIntrinsic { ratio, bound: c_bound });
            }
            let half = Cylinder::construction(center, t0, 0.5 * s, 0.5 * r);
            terms.insert("source".into(), average(g, &double, |n| f[n].abs().powf(2.0 * p))?.powf(1.0 / p));
            terms.insert("scale".into(), theta_o.powf((m + 1.0) / (1.0 - m)) / s);
            average(g, &half, |n| en[n].powf(p))?.powf(1.0 / p)
        }
        ProbeRegion::Parabolic { center, t0, r } => {
            let q = Cylinder::centered(center, t0, r * r, r);
            ensure_inside(g, &q)?;
            let k = average(g, &q, |n| u[n].max(0.0).powf(m + 1.0))?.powf(1.0 - m);
            let e = (1.0 - m) / (2.0 * m * p);
            let half = q.scaled(0.5, 0.5);
            let r2p = r.powf(2.0 * p);
            terms.insert("source".into(), k.sqrt() * average(g, &q, |n| r2p * f[n].abs().powf(2.0 * p))?.powf(e));
            terms.insert("k_term".into(), k.powf(1.5));
            terms.insert("unit".into(), 1.0);
            average(g, &half, |n| en[n].powf(p))?.powf(e)
        }
    };
    Ok((lhs, terms))
}

/// Ratio of (⨍⨍_{½Q} |Du^m|^{2p})^{1/p} to the theorem's right-hand side per exponent and level.
pub fn higher_integrability_probe(levels: &[EstimateFields], probe: &HigherIntegrabilityProbe) -> Result<ProbeTable> {
    let mut rows = Vec::new();
    for (level, fl) in levels.iter().enumerate() {
        for &p in &probe.p_list {
            let (lhs, rhs_terms) = probe_level(fl, &probe.region, p)?;
            let sum: f64 = rhs_terms.values().sum();
            let ratio = if sum > 0.0 { lhs / sum } else { 0.0 };
            rows.push(ProbeRow { level, h: fl.grid().h, p, lhs, rhs_terms, ratio });
        }
    }
    let verdicts = probe
        .p_list
        .iter()
        .map(|&p| {
            let series: Vec<f64> = rows.iter().filter(|r| r.p == p).map(|r| r.ratio).collect();
            let finest_change = match series.len() {
                0 | 1 => f64::INFINITY,
                k => relative_change(series[k - 1], series[k - 2]),
            };
            ProbeVerdict { p, finest_change, bounded: finest_change < BOUNDED_CHANGE && series.iter().all(|v| v.is_finite()) }
        })
        .collect();
    Ok(ProbeTable { probe: probe.clone(), rows, verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{point, ModelParams, ScalarField, SpaceTimeGrid};
    use crate::solver::Barenblatt;

    #[test]
    fn exponents_are_validated() {
        let region = ProbeRegion::Parabolic { center: point(&[0.0]), t0: 2.0, r: 0.5 };
        assert!(HigherIntegrabilityProbe::new(vec![1.0], region).is_err());
        assert!(HigherIntegrabilityProbe::new(vec![1.6], region).is_err());
        assert!(HigherIntegrabilityProbe::new(vec![1.05, 1.5], region).is_ok());
    }

    #[test]
    fn constant_has_zero_lhs() {
        let params = ModelParams::new(1, 0.5).unwrap();
        let g = SpaceTimeGrid::cube(1, 2.0, 64, (0.0, 2.0), 32).unwrap();
        let fl = EstimateFields::new(ScalarField::constant(g, 1.0, "u"), None, &params).unwrap();
        let probe = HigherIntegrabilityProbe::new(
            vec![1.2],
            ProbeRegion::SubIntrinsic { center: point(&[0.0]), t0: 1.0, s: 0.25, theta_o: 1.0, c_bound: 2.0 },
        )
        .unwrap();
        let t = higher_integrability_probe(&[fl], &probe).unwrap();
        assert!(t.rows[0].lhs < 1e-20);
        assert!(!t.verdicts[0].bounded);
    }

    #[test]
    fn heat_kernel_is_bounded() {
        let params = ModelParams::heat_limit(1);
        let levels: Vec<EstimateFields> = [128usize, 256, 512]
            .iter()
            .map(|&c| {
                let g = SpaceTimeGrid::cube(1, 3.0, c, (1.0, 3.0), c / 4).unwrap();
                let u = ScalarField::from_fn(g, "heat", |x, t| (-x[0] * x[0] / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt());
                EstimateFields::new(u, None, &params).unwrap()
            })
            .collect();
        let probe = HigherIntegrabilityProbe::new(vec![1.2], ProbeRegion::Parabolic { center: point(&[0.5]), t0: 2.0, r: 0.8 }).unwrap();
        let t = higher_integrability_probe(&levels, &probe).unwrap();
        assert!(t.verdicts[0].bounded, "{:?}", t.verdicts);
    }

    #[test]
    fn barenblatt_is_bounded() {
        let params = ModelParams::new(1, 0.5).unwrap();
        let b = Barenblatt::new(&params, 1.0).unwrap();
        let levels: Vec<EstimateFields> = [128usize, 256, 512]
            .iter()
            .map(|&c| {
                let g = SpaceTimeGrid::cube(1, 3.0, c, (1.0, 3.0), c / 4).unwrap();
                EstimateFields::new(b.sample(&g).unwrap(), None, &params).unwrap()
            })
            .collect();
        let region = ProbeRegion::SubIntrinsic { center: point(&[0.3]), t0: 2.0, s: 0.5, theta_o: 1.0, c_bound: 4.0 };
        let probe = HigherIntegrabilityProbe::new(vec![1.05, 1.1, 1.2], region).unwrap();
        let t = higher_integrability_probe(&levels, &probe).unwrap();
        assert!(t.verdicts.iter().all(|v| v.bounded), "{:?}", t.verdicts);
    }
}
