use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryConstants;
use crate::grid::{
    cylinder_mean, unit_ball_volume, Cylinder, CylinderWeights, FieldIntegrator, Point, ScalarField, SpaceTimeGrid,
};

/// Relative width at which the bisection bracket on ρ is closed.
pub const BISECTION_REL_TOL: f64 = 1e-7;

/// G(ρ) = I(ρ)^{2−p} ρ^{2p} (ω_n ρⁿ)^{p−2} for the ball integral I(ρ).
#[inline]
fn construction_lhs(n: usize, p: f64, integral: f64, rho: f64) -> f64 {
    let vol = unit_ball_volume(n) * rho.powi(n as i32);
    integral.powf(2.0 - p) * rho.powf(2.0 * p) * vol.powf(p - 2.0)
}

/// r̃ together with the upper end of the final bisection bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TildeR {
    pub value: f64,
    pub bracket_hi: f64,
}

/// r̃(s) = sup{ρ < R : (∫_{t−s/2}^{t+s/2}∫_{B_ρ}|f|)^{2−p} ρ^{2p} |B_ρ|^{p−2} ≤ s²} by bisection.
pub fn tilde_r(fi: &FieldIntegrator, p: f64, center: &Point, t0: f64, s: f64, r_max: f64) -> TildeR {
    let grid = fi.grid();
    let n = grid.n;
    let (a, b) = (t0 - 0.5 * s, t0 + 0.5 * s);
    let g = |rho: f64| construction_lhs(n, p, fi.ball_integral(center, rho, a, b), rho);
    let target = s * s;
    if g(r_max) <= target {
        return TildeR { value: r_max, bracket_hi: r_max };
    }
    let (mut lo, mut hi) = (0.0, r_max);
    while hi - lo > (0.5 * grid.h).min(BISECTION_REL_TOL * hi) {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    TildeR { value: lo, bracket_hi: hi }
}

/// Grid-radius scan of r̃ with direct cylinder quadrature: the largest j h < R
/// (or R itself) whose construction condition holds.
pub fn tilde_r_scan(f: &ScalarField, p: f64, center: &Point, t0: f64, s: f64, r_max: f64) -> f64 {
    let grid = &f.grid;
    let n = grid.n;
    let holds = |rho: f64| {
        let q = Cylinder::construction(*center, t0, s, rho);
        let integral = match CylinderWeights::new(grid, &q) {
            Ok(w) => w.integrate(|i| f.values[i].abs()),
            Err(_) => 0.0,
        };
        construction_lhs(n, p, integral, rho) <= s * s
    };
    if holds(r_max) {
        return r_max;
    }
    let mut best = 0.0;
    let mut j = 1;
    while (j as f64) * grid.h < r_max {
        let rho = j as f64 * grid.h;
        if holds(rho) {
            best = rho;
        }
        j += 1;
    }
    best
}

/// Nested family s ↦ Q(s) = (t − s/2, t + s/2) × B_{r(s)}(x) at one base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingProfile {
    pub center: Point,
    pub t0: f64,
    pub consts: GeometryConstants,
    /// Ascending heights.
    pub s: Vec<f64>,
    pub r_tilde: Vec<f64>,
    pub bracket_hi: Vec<f64>,
    pub r: Vec<f64>,
    /// Index a ≥ i realizing the minimum defining r(s_i).
    pub argmin: Vec<usize>,
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
    /// ⨍⨍_{Q(s)} |f|.
    pub mean_f: Vec<f64>,
    pub subintrinsic: Vec<bool>,
    pub intrinsic: Vec<bool>,
}

/// Raises if Q_{S,R}(z) in the construction convention leaves the grid.
pub fn check_ambient(grid: &SpaceTimeGrid, center: &Point, t0: f64, s_max: f64, r_max: f64) -> Result<()> {
    let inside_t = t0 - 0.5 * s_max >= grid.t_start - 1e-12 && t0 + 0.5 * s_max <= grid.t_end + 1e-12;
    let inside_x = (0..grid.n).all(|a| center[a] - r_max >= grid.lo[a] - 1e-12 && center[a] + r_max <= grid.hi[a] + 1e-12);
    if inside_t && inside_x {
        Ok(())
    } else {
        Err(Error::AmbientOutsideDomain(format!("Q_(S={s_max}, R={r_max}) at t = {t0}, x = {:?}", &center[..grid.n])))
    }
}

/// Builds the profile of |f| (wrapped in `fi`) at z = (center, t0).
pub fn build_profile(fi: &FieldIntegrator, center: &Point, t0: f64, consts: &GeometryConstants) -> Result<ScalingProfile> {
    consts.validate()?;
    let grid = fi.grid();
    if grid.n != consts.n {
        return Err(Error::FieldMismatch(format!("field dimension {} vs constants {}", grid.n, consts.n)));
    }
    check_ambient(grid, center, t0, consts.s_max, consts.r_max)?;
    let p = consts.p;
    let s = consts.s_grid();
    let len = s.len();
    let tr: Vec<TildeR> = s.iter().map(|&si| tilde_r(fi, p, center, t0, si, consts.r_max)).collect();
    let r_tilde: Vec<f64> = tr.iter().map(|t| t.value).collect();
    let bracket_hi: Vec<f64> = tr.iter().map(|t| t.bracket_hi).collect();
    let mut r = vec![0.0; len];
    let mut argmin = vec![0; len];
    r[len - 1] = r_tilde[len - 1];
    argmin[len - 1] = len - 1;
    for i in (0..len - 1).rev() {
        // min over a ≥ s_i of (s_i/a)^b̂ r̃(a), evaluated from the stored minimizer.
        let j = argmin[i + 1];
        let carried = (s[i] / s[j]).powf(consts.b_hat) * r_tilde[j];
        if r_tilde[i] <= carried {
            r[i] = r_tilde[i];
            argmin[i] = i;
        } else {
            r[i] = carried;
            argmin[i] = j;
        }
    }
    let lambda: Vec<f64> = (0..len).map(|i| (r[i] * r[i] / s[i]).powf(1.0 / (p - 2.0))).collect();
    let theta: Vec<f64> = (0..len).map(|i| s[i] / (r[i] * r[i])).collect();
    let mean_f: Vec<f64> = (0..len)
        .map(|i| {
            let q = Cylinder::construction(*center, t0, s[i], r[i]);
            fi.integral(&q) / (s[i] * unit_ball_volume(grid.n) * r[i].powi(grid.n as i32))
        })
        .collect();
    let e = (2.0 - p) / p;
    let k = consts.k_intr;
    let subintrinsic: Vec<bool> = (0..len).map(|i| mean_f[i].powf(e) <= k * theta[i]).collect();
    let intrinsic: Vec<bool> = (0..len).map(|i| subintrinsic[i] && theta[i] / k <= mean_f[i].powf(e)).collect();
    Ok(ScalingProfile {
        center: *center,
        t0,
        consts: *consts,
        s,
        r_tilde,
        bracket_hi,
        r,
        argmin,
        lambda,
        theta,
        mean_f,
        subintrinsic,
        intrinsic,
    })
}

/// Profiles for many base points, built in parallel.
pub fn build_profiles(fi: &FieldIntegrator, points: &[(Point, f64)], consts: &GeometryConstants) -> Result<Vec<ScalingProfile>> {
    points.par_iter().map(|(x, t)| build_profile(fi, x, *t, consts)).collect()
}

impl ScalingProfile {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Index of the stored height equal to `s` up to relative 1e-9.
    pub fn index_of(&self, s: f64) -> Result<usize> {
        let q = self.consts.s_ratio;
        let x = (s / self.consts.s_max).ln() / q.ln() + self.consts.s_levels as f64;
        let i = x.round();
        if i >= 0.0 && (i as usize) < self.len() && (self.s[i as usize] - s).abs() <= 1e-9 * s {
            Ok(i as usize)
        } else {
            Err(Error::ProfileMissing(s))
        }
    }

    /// Stored cylinder Q(s_i) in the construction convention.
    pub fn cylinder(&self, i: usize) -> Cylinder {
        Cylinder::construction(self.center, self.t0, self.s[i], self.r[i])
    }

    /// CSV with columns s, r_tilde, r, lambda, theta, subintrinsic, intrinsic.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,r_tilde,r,lambda,theta,subintrinsic,intrinsic\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{},{}\n",
                self.s[i], self.r_tilde[i], self.r[i], self.lambda[i], self.theta[i], self.subintrinsic[i], self.intrinsic[i]
            ));
        }
        out
    }
}

/// Intrinsicity of a cylinder with respect to u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicCheck {
    pub subintrinsic: bool,
    pub intrinsic: bool,
    /// ρ*/θ with ρ* = (⨍⨍ u^{m+1})^{(1−m)/(m+1)}.
    pub ratio: f64,
}

/// Compares (⨍⨍_Q u^{m+1})^{(1−m)/(m+1)} with θ.
pub fn check_intrinsic(u: &ScalarField, q: &Cylinder, m: f64, theta: f64, k: f64) -> Result<IntrinsicCheck> {
    let mean = cylinder_mean(u, q, m + 1.0)?;
    let rho = mean.powf((1.0 - m) / (1.0 + m));
    let sub = rho <= k * theta;
    Ok(IntrinsicCheck { subintrinsic: sub, intrinsic: sub && theta / k <= rho, ratio: rho / theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{point, ModelParams};

    fn setup(value: f64) -> (ScalarField, FieldIntegrator, GeometryConstants) {
        let g = SpaceTimeGrid::cube(2, 2.0, 64, (0.0, 4.0), 32).unwrap();
        let f = ScalarField::constant(g, value, "f");
        let fi = FieldIntegrator::new(&f);
        let c = GeometryConstants::new(&ModelParams::new(2, 0.5).unwrap(), 0.25, 1.0, 1.0, 4.0).unwrap();
        (f, fi, c)
    }

    #[test]
    fn constant_one_gives_square_root() {
        let (_, fi, c) = setup(1.0);
        for s in [0.01, 0.1, 0.5, 1.0, 1.5] {
            let tr = tilde_r(&fi, 1.5, &point(&[0.0, 0.0]), 2.0, s, 1.0);
            let expect = s.sqrt().min(1.0);
            assert!((tr.value - expect).abs() <= 0.5 * fi.grid().h, "s={s}: {} vs {expect}", tr.value);
        }
        let prof = build_profile(&fi, &point(&[0.0, 0.0]), 2.0, &c).unwrap();
        for i in 0..prof.len() {
            assert_eq!(prof.argmin[i], i);
            assert!((prof.theta[i] - 1.0).abs() < 1e-4);
            assert!(prof.intrinsic[i]);
        }
    }

    #[test]
    fn zero_field_returns_r_max() {
        let (_, fi, c) = setup(0.0);
        let prof = build_profile(&fi, &point(&[0.3, -0.2]), 2.0, &c).unwrap();
        assert!(prof.r_tilde.iter().all(|r| *r == 1.0));
        assert!(prof.subintrinsic.iter().all(|b| *b));
        assert!(!prof.intrinsic.iter().any(|b| *b));
    }

    #[test]
    fn ambient_must_fit() {
        let (_, fi, c) = setup(1.0);
        assert!(matches!(build_profile(&fi, &point(&[1.5, 0.0]), 2.0, &c), Err(Error::AmbientOutsideDomain(_))));
        assert!(matches!(build_profile(&fi, &point(&[0.0, 0.0]), 0.2, &c), Err(Error::AmbientOutsideDomain(_))));
    }

    #[test]
    fn bisection_matches_scan_on_half_space_indicator() {
        let g = SpaceTimeGrid::cube(2, 2.0, 40, (0.0, 2.0), 10).unwrap();
        let f = ScalarField::from_fn(g, "half", |x, _| if x[0] > 0.1 { 3.0 } else { 0.0 });
        let fi = FieldIntegrator::new(&f);
        for s in [0.02, 0.1, 0.4, 0.9] {
            let c = point(&[0.0, 0.05]);
            let b = tilde_r(&fi, 1.5, &c, 1.0, s, 1.0).value;
            let sc = tilde_r_scan(&f, 1.5, &c, 1.0, s, 1.0);
            assert!((b - sc).abs() <= g.h, "s={s}: {b} vs {sc}");
        }
    }

    #[test]
    fn intrinsic_check_on_constants() {
        let g = SpaceTimeGrid::cube(1, 1.0, 8, (0.0, 1.0), 4).unwrap();
        let q = Cylinder::centered(point(&[0.0]), 0.5, 0.25, 0.5);
        let z = check_intrinsic(&ScalarField::zeros(g, "u"), &q, 0.5, 1.0, 1.0).unwrap();
        assert!(z.subintrinsic && !z.intrinsic && z.ratio == 0.0);
        let c: f64 = 2.0;
        let u = ScalarField::constant(g, c, "u");
        let r = check_intrinsic(&u, &q, 0.5, c.powf(0.5), 1.0).unwrap();
        assert!(r.intrinsic && (r.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn index_lookup() {
        let (_, fi, c) = setup(1.0);
        let prof = build_profile(&fi, &point(&[0.0, 0.0]), 2.0, &c).unwrap();
        assert_eq!(prof.index_of(prof.s[17]).unwrap(), 17);
        assert!(prof.index_of(0.3).is_err());
        assert!(prof.to_csv().lines().count() == prof.len() + 1);
    }
}
