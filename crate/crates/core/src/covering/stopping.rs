use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::covering::{CoveringConfig, FamilyMeans, ProfileFamily};
use crate::error::{Error, Result};
use crate::estimates::{regime_classify, Regime, RegimeLabel};
use crate::geometry::ScalingProfile;
use crate::grid::{Cylinder, Point, ScalarField};

/// Which row of the case table produced a stopping cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    #[serde(rename = "CASE1_DEG_INTRINSIC")]
    Case1DegIntrinsic,
    #[serde(rename = "CASE2_NONDEG_INTRINSIC")]
    Case2NondegIntrinsic,
    #[serde(rename = "CASE3_NEVER_INTRINSIC")]
    Case3NeverIntrinsic,
}

impl CaseLabel {
    pub fn index(self) -> usize {
        match self {
            CaseLabel::Case1DegIntrinsic => 0,
            CaseLabel::Case2NondegIntrinsic => 1,
            CaseLabel::Case3NeverIntrinsic => 2,
        }
    }
}

/// Stored cylinder Q(s_z, y_z) with ⨍⨍ F > λ, maximal in the scan order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub profile: usize,
    pub index: usize,
    pub s: f64,
    pub y: Point,
    pub t_y: f64,
    pub mean: f64,
    /// Largest mean over stored cylinders strictly enclosing the witness (0 if none).
    pub ancestor_max: f64,
    /// ancestor_max ≤ 2λ.
    pub ancestors_ok: bool,
}

/// Scan order: larger s, then larger radius, then smaller base point (t, x).
fn scan_order(family: &ProfileFamily, a: (usize, usize), b: (usize, usize)) -> Ordering {
    let pa = &family.profiles[a.0];
    let pb = &family.profiles[b.0];
    pb.s[b.1]
        .total_cmp(&pa.s[a.1])
        .then(pb.r[b.1].total_cmp(&pa.r[a.1]))
        .then_with(|| {
            let (ka, kb) = (family.base_key(a.0), family.base_key(b.0));
            ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
        })
}

fn witness(family: &ProfileFamily, means: &FamilyMeans, p: usize, i: usize, ancestor_max: f64, lambda: f64) -> Witness {
    let prof = &family.profiles[p];
    Witness {
        profile: p,
        index: i,
        s: prof.s[i],
        y: prof.center,
        t_y: prof.t0,
        mean: means.means[p][i],
        ancestor_max,
        ancestors_ok: ancestor_max <= 2.0 * lambda,
    }
}

/// Stopping cylinder at z = (x, t); `None` when no stored cylinder containing z has mean above λ.
pub fn stopping_cylinder(family: &ProfileFamily, means: &FamilyMeans, x: &Point, t: f64, lambda: f64) -> Option<Witness> {
    let mut best: Option<(usize, usize)> = None;
    for p in 0..family.len() {
        let Some(i0) = family.first_containing(p, x, t) else { continue };
        if means.suffix_max[p][i0] <= lambda {
            continue;
        }
        let row = &means.means[p];
        let j = (i0..row.len()).rev().find(|&i| row[i] > lambda).expect("suffix max exceeds lambda");
        if best.is_none_or(|b| scan_order(family, (p, j), b) == Ordering::Less) {
            best = Some((p, j));
        }
    }
    let (p, i) = best?;
    let q = family.cylinder(p, i);
    let mut anc: f64 = 0.0;
    for xi in 0..family.len() {
        if let Some(mut j0) = family.first_enclosing(xi, &q) {
            if xi == p {
                j0 = j0.max(i + 1);
            }
            if j0 < means.suffix_max[xi].len() {
                anc = anc.max(means.suffix_max[xi][j0]);
            }
        }
    }
    Some(witness(family, means, p, i, anc, lambda))
}

/// Enumeration of the whole family for the stopping cylinder at z.
pub fn stopping_cylinder_brute(family: &ProfileFamily, means: &FamilyMeans, x: &Point, t: f64, lambda: f64) -> Option<Witness> {
    let n = family.grid.n;
    let mut cands = Vec::new();
    for p in 0..family.len() {
        for i in 0..family.profiles[p].len() {
            if means.means[p][i] > lambda && family.cylinder(p, i).contains(n, x, t) {
                cands.push((p, i));
            }
        }
    }
    cands.sort_by(|a, b| scan_order(family, *a, *b));
    let &(p, i) = cands.first()?;
    let q = family.cylinder(p, i);
    let mut anc: f64 = 0.0;
    for xi in 0..family.len() {
        for j in 0..family.profiles[xi].len() {
            if (xi, j) != (p, i) && family.cylinder(xi, j).contains_cylinder(n, &q) {
                anc = anc.max(means.means[xi][j]);
            }
        }
    }
    Some(witness(family, means, p, i, anc, lambda))
}

/// Completed stopping cylinder with its case and the triple Q_z ⊂ Q_z* ⊂ Q_z**.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingCylinder {
    pub witness: Witness,
    pub case: CaseLabel,
    /// Intrinsic height in [2s_z, c_o s_z] (cases 1 and 2).
    pub sigma: Option<f64>,
    pub regime: Option<Regime>,
    pub q_z: Cylinder,
    pub q_star: Cylinder,
    pub q_star_star: Cylinder,
    /// Height of Q_z*, the Vitali size key.
    pub star_height: f64,
    /// Dilation factor relative to s_z stays within c₂.
    pub within_c2: bool,
    /// The window [2s_z, c_o s_z] was cut at S.
    pub window_clipped: bool,
    /// |Q_z**| / |Q_z|.
    pub size_ratio: f64,
    /// θ at height 2s_z.
    pub theta_2s: f64,
    /// First intrinsic height in [c_o s_z, S] (case 3).
    pub sigma_z: Option<f64>,
}

/// Index of the smallest stored height ≥ h.
fn stored_at_least(prof: &ScalingProfile, h: f64) -> Result<usize> {
    prof.s
        .iter()
        .position(|&s| s >= h * (1.0 - 1e-9))
        .ok_or(Error::DilationEscapesDomain { height: h, max: prof.consts.s_max })
}

/// ½Q: half the height and half the radius of a stored cylinder.
pub fn half_cylinder(q: &Cylinder) -> Cylinder {
    Cylinder::construction(q.center, q.t0, 0.5 * q.height(), 0.5 * q.radius)
}

/// Case table: scans σ ∈ [2s_z, c_o s_z] for an intrinsic cylinder and builds the triple.
pub fn classify_and_dilate(w: &Witness, u: &ScalarField, family: &ProfileFamily, cfg: &CoveringConfig) -> Result<StoppingCylinder> {
    let prof = &family.profiles[w.profile];
    let n = family.grid.n;
    let s_z = w.s;
    let s_max = prof.consts.s_max;
    let i2 = stored_at_least(prof, 2.0 * s_z)?;
    let top = cfg.c_o * s_z;
    let window_clipped = top > s_max * (1.0 + 1e-9);
    let in_window = |j: usize| prof.s[j] <= top * (1.0 + 1e-9);
    let found = (i2..prof.len()).take_while(|&j| in_window(j)).find(|&j| prof.intrinsic[j]);
    let cyl = |h: f64| -> Result<Cylinder> { Ok(prof.cylinder(stored_at_least(prof, h)?)) };
    let (case, sigma, regime, q_z, q_star, q_star_star, factor, sigma_z) = match found {
        Some(j) => {
            let sigma = prof.s[j];
            let q_sigma = prof.cylinder(j);
            let regime = regime_classify(u, &q_sigma, cfg.m, cfg.epsilon)?;
            match regime.label {
                RegimeLabel::Degenerate => {
                    let t3 = cfg.tilde3 * sigma;
                    (
                        CaseLabel::Case1DegIntrinsic,
                        Some(sigma),
                        Some(regime),
                        q_sigma,
                        cyl(t3)?,
                        cyl(2.0 * cfg.c_1 * t3)?,
                        2.0 * cfg.c_1 * t3 / s_z,
                        None,
                    )
                }
                RegimeLabel::NonDegenerate => (
                    CaseLabel::Case2NondegIntrinsic,
                    Some(sigma),
                    Some(regime),
                    half_cylinder(&q_sigma),
                    q_sigma,
                    cyl(2.0 * cfg.c_1 * sigma)?,
                    2.0 * cfg.c_1 * sigma / s_z,
                    None,
                ),
            }
        }
        None => {
            let q2 = prof.cylinder(i2);
            let sigma_z = (0..prof.len()).find(|&j| prof.s[j] >= top * (1.0 - 1e-9) && prof.intrinsic[j]).map(|j| prof.s[j]);
            (
                CaseLabel::Case3NeverIntrinsic,
                None,
                None,
                half_cylinder(&q2),
                q2,
                cyl(4.0 * cfg.c_1 * s_z)?,
                4.0 * cfg.c_1,
                sigma_z,
            )
        }
    };
    Ok(StoppingCylinder {
        witness: *w,
        case,
        sigma,
        regime,
        q_z,
        q_star,
        q_star_star,
        star_height: q_star.height(),
        within_c2: factor <= cfg.c_2 * (1.0 + 1e-12),
        window_clipped,
        size_ratio: q_star_star.measure(n) / q_z.measure(n),
        theta_2s: prof.theta[i2],
        sigma_z,
    })
}
