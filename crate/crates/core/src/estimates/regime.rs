use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{pow_m, Cylinder, CylinderWeights, ScalarField};

/// Degenerate or non-degenerate behaviour of u on a cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegimeLabel {
    Degenerate,
    NonDegenerate,
}

/// Regime classification of one cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub label: RegimeLabel,
    pub epsilon: f64,
    /// (⨍⨍|u^m − ⟨u^m⟩|^{(m+1)/m})^{1/(m+1)} / (⨍⨍u^{m+1})^{1/(m+1)}.
    pub oscillation_ratio: f64,
    /// Set when ⨍⨍u^{m+1} = 0; the label is then NonDegenerate with ratio 0.
    pub zero_solution: bool,
}

/// Oscillation of u^m against the size of u over `q`; DEGENERATE iff ratio ≥ ε.
pub fn regime_classify(u: &ScalarField, q: &Cylinder, m: f64, epsilon: f64) -> Result<Regime> {
    let w = CylinderWeights::new(&u.grid, q)?;
    let vals = &u.values;
    let size = w.mean(|i| vals[i].max(0.0).powf(m + 1.0)).powf(1.0 / (m + 1.0));
    if size <= 0.0 {
        return Ok(Regime { label: RegimeLabel::NonDegenerate, epsilon, oscillation_ratio: 0.0, zero_solution: true });
    }
    let mean_vm = w.mean(|i| pow_m(vals[i].max(0.0), m));
    let e = (m + 1.0) / m;
    let osc = w.mean(|i| (pow_m(vals[i].max(0.0), m) - mean_vm).abs().powf(e)).powf(1.0 / (m + 1.0));
    let ratio = osc / size;
    let label = if ratio >= epsilon { RegimeLabel::Degenerate } else { RegimeLabel::NonDegenerate };
    Ok(Regime { label, epsilon, oscillation_ratio: ratio, zero_solution: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{point, SpaceTimeGrid};

    #[test]
    fn constant_is_non_degenerate() {
        let g = SpaceTimeGrid::cube(2, 1.0, 8, (0.0, 1.0), 4).unwrap();
        let u = ScalarField::constant(g, 2.0, "u");
        let q = Cylinder::construction(point(&[0.0, 0.0]), 0.5, 0.5, 0.5);
        let r = regime_classify(&u, &q, 0.5, 0.1).unwrap();
        assert_eq!(r.label, RegimeLabel::NonDegenerate);
        assert!(r.oscillation_ratio < 1e-14);
        let z = regime_classify(&ScalarField::zeros(g, "z"), &q, 0.5, 0.1).unwrap();
        assert!(z.zero_solution && z.label == RegimeLabel::NonDegenerate);
    }

    #[test]
    fn two_level_closed_form() {
        // u = 1 on x < 0, u = 4 on x > 0 over the whole box; m = 1/2.
        let g = SpaceTimeGrid::cube(1, 1.0, 2, (0.0, 1.0), 1).unwrap();
        let u = ScalarField::from_fn(g, "u", |x, _| if x[0] < 0.0 { 1.0 } else if x[0] > 0.0 { 4.0 } else { 2.5 });
        let q = Cylinder::construction(point(&[0.0]), 0.5, 1.0, 1.0);
        let r = regime_classify(&u, &q, 0.5, 0.1).unwrap();
        // Dual cells: [-1,-0.5] → 1, [-0.5,0.5] → 2.5, [0.5,1] → 4 with weights 1/4, 1/2, 1/4.
        let vm = [1.0f64, 2.5f64.sqrt(), 2.0];
        let wts = [0.25, 0.5, 0.25];
        let mean: f64 = (0..3).map(|i| wts[i] * vm[i]).sum();
        let osc: f64 = (0..3).map(|i| wts[i] * (vm[i] - mean).abs().powi(3)).sum::<f64>().powf(1.0 / 1.5);
        let size: f64 = (0..3).map(|i| wts[i] * vm[i].powi(3)).sum::<f64>().powf(1.0 / 1.5);
        assert!((r.oscillation_ratio - osc / size).abs() < 1e-14);
        assert_eq!(r.label, if osc / size >= 0.1 { RegimeLabel::Degenerate } else { RegimeLabel::NonDegenerate });
    }
}
