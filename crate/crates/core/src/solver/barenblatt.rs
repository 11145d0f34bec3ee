use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ModelParams, Point, ScalarField, SpaceTimeGrid};

/// Self-similar solution u = t^{−α}(C + k|x|² t^{−2β})^{−1/(1−m)} of u_t = Δu^m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Barenblatt {
    pub n: usize,
    pub m: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
}

impl Barenblatt {
    pub fn new(params: &ModelParams, c: f64) -> Result<Self> {
        let n = params.n as f64;
        let m = params.m;
        let denom = n * (m - 1.0) + 2.0;
        if !(denom > 0.0) {
            return Err(Error::InvalidExponent(format!("n(m−1)+2 = {denom} must be positive")));
        }
        if !(m < 1.0) {
            return Err(Error::InvalidExponent(format!("m = {m} must be below 1")));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidParams(format!("C = {c} must be positive")));
        }
        let alpha = n / denom;
        let beta = alpha / n;
        let k = (1.0 - m) * alpha / (2.0 * m * n);
        Ok(Barenblatt { n: params.n, m, c, alpha, beta, k })
    }

    /// u(x, t) for t > 0.
    pub fn value(&self, x: &Point, t: f64) -> f64 {
        let r2: f64 = x[..self.n].iter().map(|v| v * v).sum();
        t.powf(-self.alpha) * (self.c + self.k * r2 * t.powf(-2.0 * self.beta)).powf(-1.0 / (1.0 - self.m))
    }

    /// Samples the solution on every node; requires t_start > 0.
    pub fn sample(&self, grid: &SpaceTimeGrid) -> Result<ScalarField> {
        if !(grid.t_start > 0.0) {
            return Err(Error::InvalidGrid("Barenblatt sampling needs t_start > 0".into()));
        }
        let mut f = ScalarField::from_fn(*grid, "barenblatt", |x, t| self.value(x, t));
        f.nonnegative = true;
        Ok(f)
    }

    /// ∫ u(·, t) dx over ℝⁿ.
    pub fn total_mass(&self) -> f64 {
        let n = self.n as f64;
        let q = 1.0 / (1.0 - self.m);
        let radial = match self.n {
            1 => 2.0,
            2 => 2.0 * std::f64::consts::PI,
            _ => 4.0 * std::f64::consts::PI,
        };
        // ∫_0^∞ ρ^{n−1}(C + kρ²)^{−q} dρ = ½ k^{−n/2} C^{n/2−q} B(n/2, q − n/2)
        let a = n / 2.0;
        let b = q - a;
        radial * 0.5 * self.k.powf(-a) * self.c.powf(a - q) * beta_fn(a, b)
    }
}

/// Euler beta function through the Lanczos log-gamma.
fn beta_fn(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Free-function form of [`Barenblatt::value`].
pub fn barenblatt(params: &ModelParams, c: f64, x: &Point, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParams(format!("t = {t} must be positive")));
    }
    Ok(Barenblatt::new(params, c)?.value(x, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::point;

    #[test]
    fn exponents_in_two_dimensions() {
        let b = Barenblatt::new(&ModelParams::new(2, 0.5).unwrap(), 1.0).unwrap();
        assert_eq!((b.alpha, b.beta, b.k), (2.0, 1.0, 0.5));
    }

    #[test]
    fn center_value() {
        let p = ModelParams::new(2, 0.5).unwrap();
        let u = barenblatt(&p, 2.0, &point(&[0.0, 0.0]), 3.0).unwrap();
        assert!((u - 3f64.powf(-2.0) * 2f64.powf(-2.0)).abs() < 1e-15);
        assert!(barenblatt(&p, 1.0, &point(&[0.0, 0.0]), 0.0).is_err());
    }

    #[test]
    fn rejects_supercritical_exponent() {
        let p = ModelParams { n: 3, m: 0.3, p: 1.3, nu: 1.0, l_up: 1.0 };
        assert!(Barenblatt::new(&p, 1.0).is_err());
    }

    #[test]
    fn satisfies_the_equation_pointwise() {
        // Fourth-order differences of u_t − Δu^m at scattered points.
        for (n, m) in [(1usize, 0.3), (2, 0.5), (2, 0.8)] {
            let b = Barenblatt::new(&ModelParams::new(n, m).unwrap(), 1.0).unwrap();
            let e = 1e-3;
            for (x0, t) in [(0.3, 1.0), (-0.7, 1.5), (1.2, 2.0)] {
                let x = point(&[x0, 0.4 * x0][..n]);
                let d4 = |g: &dyn Fn(f64) -> f64| (-g(2.0 * e) + 8.0 * g(e) - 8.0 * g(-e) + g(-2.0 * e)) / (12.0 * e);
                let ut = d4(&|d| b.value(&x, t + d));
                let mut lap = 0.0;
                for a in 0..n {
                    let vm = |d: f64| {
                        let mut y = x;
                        y[a] += d;
                        b.value(&y, t).powf(m)
                    };
                    lap += (-vm(2.0 * e) + 16.0 * vm(e) - 30.0 * vm(0.0) + 16.0 * vm(-e) - vm(-2.0 * e)) / (12.0 * e * e);
                }
                assert!((ut - lap).abs() < 1e-6, "n={n} m={m} residual {}", ut - lap);
            }
        }
    }

    #[test]
    fn closed_form_mass() {
        let b = Barenblatt::new(&ModelParams::new(2, 0.5).unwrap(), 1.0).unwrap();
        assert!((b.total_mass() - 2.0 * std::f64::consts::PI).abs() < 1e-10);
        let b1 = Barenblatt::new(&ModelParams::new(1, 0.5).unwrap(), 1.0).unwrap();
        // ∫(1 + x²/3)^{-2} dx = π √3 / 2
        assert!((b1.total_mass() - std::f64::consts::PI * 3f64.sqrt() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn mass_is_conserved_on_a_large_box() {
        let b = Barenblatt::new(&ModelParams::new(2, 0.5).unwrap(), 1.0).unwrap();
        let grid = SpaceTimeGrid::cube(2, 100.0, 1600, (1.0, 1.5), 1).unwrap();
        let u = b.sample(&grid).unwrap();
        let h2 = grid.h * grid.h;
        let mass = |k: usize| -> f64 {
            let mut total = 0.0;
            for s in 0..grid.space_nodes() {
                let idx = grid.unravel(s);
                let mut w = h2;
                for a in 0..2 {
                    if idx[a] == 0 || idx[a] == grid.cells[a] {
                        w *= 0.5;
                    }
                }
                total += w * u.at(k, s);
            }
            total
        };
        let (m0, m1) = (mass(0), mass(1));
        assert!((m0 - m1).abs() / m0 < 1e-3, "{m0} {m1}");
    }
}
