use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::InequalityReport;
use crate::grid::{pow_m, Cylinder, CylinderWeights, ScalarField};

/// ∫_a^u (y^m − a^m) dy against its two-sided bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxBounds {
    /// ∫_a^u (y^m − a^m) dy for u ≥ a, ∫_u^a (a^m − y^m) dy otherwise.
    pub integral: f64,
    /// (1/2)(u−a)(u^m−a^m) for u ≥ a, (m/2)(a−u)(a^m−u^m) otherwise.
    pub lower: f64,
    /// |u−a| |u^m−a^m|.
    pub upper: f64,
    pub holds: bool,
}

pub fn aux_integral_bounds(u: f64, a: f64, m: f64) -> AuxBounds {
    let prod = (u - a).abs() * (pow_m(u, m) - pow_m(a, m)).abs();
    let (integral, lower) = if u >= a {
        ((u.powf(m + 1.0) - a.powf(m + 1.0)) / (m + 1.0) - pow_m(a, m) * (u - a), 0.5 * prod)
    } else {
        (pow_m(a, m) * (a - u) - (a.powf(m + 1.0) - u.powf(m + 1.0)) / (m + 1.0), 0.5 * m * prod)
    };
    let slack = 1e-12 * (1.0 + prod);
    AuxBounds { integral, lower, upper: prod, holds: lower <= integral + slack && integral <= prod + slack }
}

/// |a^m − b^m| ≤ |a − b|^m.
pub fn power_inequality(a: f64, b: f64, m: f64) -> bool {
    let lhs = (pow_m(a, m) - pow_m(b, m)).abs();
    lhs <= (a - b).abs().powf(m) * (1.0 + 1e-12) + 1e-300
}

/// Weighted sample on a cylinder: values, quadrature weights, a weight η and a sub-cylinder mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanChangeData {
    pub g: Vec<f64>,
    pub w: Vec<f64>,
    pub eta: Vec<f64>,
    pub inner: Vec<bool>,
}

impl MeanChangeData {
    /// Samples `field` over `q` with η(x, t) and the mask of Q₁ ⊂ Q.
    pub fn from_cylinders<E: Fn(&crate::grid::Point, f64) -> f64>(
        field: &ScalarField,
        q: &Cylinder,
        q1: &Cylinder,
        eta: E,
    ) -> Result<Self> {
        let grid = &field.grid;
        let cw = CylinderWeights::new(grid, q)?;
        let ns = grid.space_nodes();
        let mut d = MeanChangeData { g: vec![], w: vec![], eta: vec![], inner: vec![] };
        for &(k, wt) in &cw.time {
            for &(s, ws) in &cw.space {
                let x = grid.node_point(s);
                let t = grid.time(k);
                d.g.push(field.values[k * ns + s]);
                d.w.push(wt * ws);
                d.eta.push(eta(&x, t));
                let (a, b) = q1.time_interval();
                d.inner.push(a <= t && t <= b && crate::grid::dist(grid.n, &x, &q1.center) <= q1.radius);
            }
        }
        Ok(d)
    }

    fn mean_with<F: Fn(usize) -> f64>(&self, weight: &[f64], g: F) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.g.len() {
            num += weight[i] * g(i);
            den += weight[i];
        }
        num / den
    }

    fn eta_weights(&self) -> Vec<f64> {
        self.w.iter().zip(&self.eta).map(|(w, e)| w * e).collect()
    }

    fn inner_weights(&self) -> Vec<f64> {
        self.w.iter().zip(&self.inner).map(|(w, &b)| if b { *w } else { 0.0 }).collect()
    }
}

/// Exponents and parameters of the mean-change lemmas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanChangeParams {
    /// Exponent of the best-constant property, ≥ 1.
    pub q_bcp: f64,
    /// Power q of the quadratic comparison.
    pub q_power: f64,
    pub m: f64,
    /// Exponent p ≥ 1/m of the convex mean change.
    pub p: f64,
    /// ε ∈ (0, 1) of the small-mean lemma.
    pub epsilon: f64,
    /// Exponent of the small-mean lemma, ≥ 1.
    pub q_small: f64,
    /// K with sup g ≤ K ⟨g⟩, required for q_power ≤ 1/2.
    pub k_bound: Option<f64>,
}

fn lp(v: f64, q: f64) -> f64 {
    v.abs().powf(q)
}

/// Both sides of the best-constant, mean-change, quadratic-comparison and small-mean inequalities.
pub fn mean_change_checks(d: &MeanChangeData, prm: &MeanChangeParams) -> Result<Vec<InequalityReport>> {
    if d.g.iter().any(|v| *v < 0.0) {
        return Err(Error::HypothesisUnmet("mean-change lemmas need g >= 0".into()));
    }
    if d.eta.iter().any(|e| *e < 0.0) {
        return Err(Error::HypothesisUnmet("weight eta must be nonnegative".into()));
    }
    if !(prm.q_bcp >= 1.0 && prm.q_small >= 1.0 && prm.epsilon > 0.0 && prm.epsilon < 1.0 && prm.q_power > 0.0) {
        return Err(Error::HypothesisUnmet(format!("invalid mean-change parameters {prm:?}")));
    }
    let g = &d.g;
    let w = &d.w;
    let we = d.eta_weights();
    let mean = d.mean_with(w, |i| g[i]);
    let mean_eta = d.mean_with(&we, |i| g[i]);
    let q = prm.q_bcp;
    let mut out = Vec::new();

    let osc_eta_eta = d.mean_with(&we, |i| lp(g[i] - mean_eta, q)).powf(1.0 / q);
    let osc_eta_c = d.mean_with(&we, |i| lp(g[i] - mean, q)).powf(1.0 / q);
    out.push(InequalityReport::new("best_constant", osc_eta_eta, &[("twice_osc_about_c", 2.0 * osc_eta_c)], 1.0));

    if d.eta.iter().all(|e| *e <= 1.0) {
        let norm_eta: f64 = we.iter().sum();
        let osc_plain = (w.iter().zip(g).map(|(wi, gi)| wi * lp(gi - mean, q)).sum::<f64>() / norm_eta).powf(1.0 / q);
        out.push(InequalityReport::new("mean_change", osc_eta_eta, &[("twice_plain_osc", 2.0 * osc_plain)], 1.0));
        out.push(
            InequalityReport::new("mean_change_difference", (mean_eta - mean).abs(), &[("weighted_osc", osc_eta_eta)], 1.0)
                .with_check("weighted_osc_below_twice_plain", osc_eta_eta <= 2.0 * osc_plain * (1.0 + 1e-12) + 1e-300),
        );
    }

    let qp = prm.q_power;
    if qp <= 0.5 {
        let k = prm.k_bound.ok_or_else(|| Error::HypothesisUnmet(format!("q = {qp} <= 1/2 needs sup g <= K mean g")))?;
        let sup = g.iter().copied().fold(0.0, f64::max);
        if sup > k * mean {
            return Err(Error::HypothesisUnmet(format!("sup g = {sup} exceeds K mean g = {}", k * mean)));
        }
    }
    let mean_q = d.mean_with(w, |i| g[i].powf(qp));
    let t1 = d.mean_with(w, |i| (g[i].powf(qp) - mean.powf(qp)).powi(2));
    let t2 = d.mean_with(w, |i| (g[i].powf(qp) - mean_q).powi(2));
    out.push(InequalityReport::new("quadratic_power_lower", t1, &[("centered", t2)], f64::INFINITY));
    out.push(
        InequalityReport::new("quadratic_power_upper", t2, &[("power_of_mean", t1)], 1.0)
            .with_check("orthogonality", t2 <= t1 * (1.0 + 1e-12) + 1e-300),
    );

    let (m, p) = (prm.m, prm.p);
    if !(m > 0.0 && m < 1.0 && p >= 1.0 / m) {
        return Err(Error::HypothesisUnmet(format!("convex mean change needs 0 < m < 1 and p >= 1/m, got m = {m}, p = {p}")));
    }
    let um_eta = d.mean_with(&we, |i| pow_m(g[i], m));
    let a = d.mean_with(&we, |i| lp(pow_m(g[i], m) - pow_m(mean_eta, m), p)).powf(1.0 / p);
    let b = d.mean_with(&we, |i| lp(pow_m(g[i], m) - um_eta, p)).powf(1.0 / p);
    out.push(InequalityReport::new("convex_mean_change", a, &[("centered_power", b)], f64::INFINITY));
    out.push(InequalityReport::new("convex_mean_change_reverse", b, &[("twice_power_of_mean", 2.0 * a)], 1.0));

    let wi = d.inner_weights();
    if wi.iter().sum::<f64>() > 0.0 {
        let qs = prm.q_small;
        let eps = prm.epsilon;
        let mean1 = d.mean_with(&wi, |i| g[i]).abs();
        let norm_q = d.mean_with(w, |i| lp(g[i], qs)).powf(1.0 / qs);
        let osc = d.mean_with(w, |i| lp(g[i] - mean, qs)).powf(1.0 / qs);
        let ratio = (w.iter().sum::<f64>() / wi.iter().sum::<f64>()).powf(1.0 / qs);
        let hyp = mean1 <= eps * norm_q;
        let rhs = eps / (1.0 - eps) * (1.0 + ratio) * osc;
        let r = if hyp {
            InequalityReport::new("small_mean", eps * norm_q, &[("oscillation", rhs)], 1.0)
        } else {
            InequalityReport::new("small_mean", 0.0, &[("oscillation", rhs)], 1.0)
        };
        out.push(r.with_flag("hypothesis_met", hyp));
    }
    Ok(out)
}
