use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryConstants;

/// Which boxes enter the box maximal function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxMode {
    /// Every union of consecutive dual time cells and every radius j h/2.
    Exhaustive,
    /// Aligned time blocks of 2^k cells and radii 2^j h/2.
    Dyadic,
}

/// Constants of the level-set covering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringConfig {
    pub m: f64,
    pub b_hat: f64,
    pub beta: f64,
    /// Regime threshold ε.
    pub epsilon: f64,
    /// δ̃ ∈ (0, 1/2).
    pub delta_tilde: f64,
    /// Sub-intrinsic energy constant for K = 1 (measured).
    pub gamma_1: f64,
    /// Engulfing constant (measured).
    pub c_1: f64,
    /// 3^{1/b̂}.
    pub tilde3: f64,
    /// γ₁ (2/c_o)^{((m+1)/(1−m))β − 1} = δ̃.
    pub c_o: f64,
    /// 2 c₁ 3̃ c_o.
    pub c_2: f64,
    /// Constant c in C(f̃, δ̃) of the threshold μ_{a,b}.
    pub mu_constant: f64,
    /// Reverse Hölder exponent used for the empirical constant of (ii).
    pub vartheta: f64,
    /// Base points on every `lattice_stride`-th node per axis.
    pub lattice_stride: usize,
    pub box_mode: BoxMode,
}

impl CoveringConfig {
    pub fn new(consts: &GeometryConstants, gamma_1: f64, c_1: f64, delta_tilde: f64) -> Result<Self> {
        consts.validate_pipeline()?;
        let mut c = CoveringConfig {
            m: consts.m,
            b_hat: consts.b_hat,
            beta: consts.beta,
            epsilon: 0.1,
            delta_tilde,
            gamma_1,
            c_1,
            tilde3: consts.tilde3(),
            c_o: 0.0,
            c_2: 0.0,
            mu_constant: 1.0,
            vartheta: 0.75,
            lattice_stride: 4,
            box_mode: BoxMode::Dyadic,
        };
        c.derive()?;
        Ok(c)
    }

    /// ((m+1)/(1−m)) β − 1.
    pub fn window_exponent(&self) -> f64 {
        (self.m + 1.0) / (1.0 - self.m) * self.beta - 1.0
    }

    fn derive(&mut self) -> Result<()> {
        if !(self.delta_tilde > 0.0 && self.delta_tilde < 0.5) {
            return Err(Error::InvalidConstants(format!("delta_tilde = {} must lie in (0, 1/2)", self.delta_tilde)));
        }
        if !(self.gamma_1 > self.delta_tilde) {
            return Err(Error::InvalidConstants(format!(
                "gamma_1 = {} must exceed delta_tilde = {} for c_o > 2",
                self.gamma_1, self.delta_tilde
            )));
        }
        if !(self.c_1 > 1.0) {
            return Err(Error::InvalidConstants(format!("c_1 = {} must exceed 1", self.c_1)));
        }
        let e = self.window_exponent();
        if !(e > 0.0) {
            return Err(Error::InvalidConstants(format!("((m+1)/(1-m)) beta - 1 = {e} must be positive")));
        }
        self.c_o = 2.0 * (self.gamma_1 / self.delta_tilde).powf(1.0 / e);
        self.c_2 = 2.0 * self.c_1 * self.tilde3 * self.c_o;
        Ok(())
    }

    /// Replaces δ̃ by min{1/(2c₃), 1/(2c₄)} (kept below 1/2) and rederives c_o, c₂.
    pub fn refine_delta(&mut self, c3: f64, c4: f64) -> Result<()> {
        let d = (1.0 / (2.0 * c3)).min(1.0 / (2.0 * c4));
        if !(d > 0.0) {
            return Err(Error::InvalidConstants(format!("refined delta_tilde {d} not positive")));
        }
        self.delta_tilde = d.min(0.5 * (1.0 - 1e-12));
        self.derive()
    }

    /// Residual of γ₁ (2/c_o)^e = δ̃.
    pub fn c1_identity_residual(&self) -> f64 {
        self.gamma_1 * (2.0 / self.c_o).powf(self.window_exponent()) - self.delta_tilde
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ModelParams;

    fn consts() -> GeometryConstants {
        GeometryConstants::new(&ModelParams::new(1, 0.5).unwrap(), 0.25, 1.0, 1.0, 4.0).unwrap()
    }

    #[test]
    fn derived_constants_satisfy_identities() {
        let c = CoveringConfig::new(&consts(), 2.0, 9.0, 0.25).unwrap();
        // e = 3 · 0.5 − 1 = 0.5, so c_o = 2 · 8² = 128.
        assert!((c.window_exponent() - 0.5).abs() < 1e-15);
        assert!((c.c_o - 128.0).abs() < 1e-9);
        assert!(c.c1_identity_residual().abs() < 1e-14);
        assert!((c.c_2 - 2.0 * 9.0 * 81.0 * 128.0).abs() < 1e-6);
        assert!(c.c_o > 2.0 && c.c_2 > 2.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CoveringConfig::new(&consts(), 0.2, 9.0, 0.25).is_err());
        assert!(CoveringConfig::new(&consts(), 2.0, 9.0, 0.5).is_err());
        assert!(CoveringConfig::new(&consts(), 2.0, 1.0, 0.25).is_err());
        let wide = GeometryConstants::new(&ModelParams::new(1, 0.5).unwrap(), 0.4, 1.0, 1.0, 4.0).unwrap();
        assert!(CoveringConfig::new(&wide, 2.0, 9.0, 0.25).is_err());
    }

    #[test]
    fn refinement_updates_window() {
        let mut c = CoveringConfig::new(&consts(), 2.0, 9.0, 0.25).unwrap();
        c.refine_delta(2.0, 4.0).unwrap();
        assert!((c.delta_tilde - 0.125).abs() < 1e-15);
        assert!(c.c1_identity_residual().abs() < 1e-14);
    }
}
