use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ModelParams;

/// Ratio between consecutive heights of the s-grid.
pub const DEFAULT_S_RATIO: f64 = 1.090_507_732_665_257_7; // 2^{1/8}

/// Octaves covered by the default s-grid below S.
pub const DEFAULT_OCTAVES: usize = 24;

/// Exponents and sizes governing the nested sub-intrinsic cylinder family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    pub n: usize,
    pub m: f64,
    pub p: f64,
    pub b_hat: f64,
    /// β = 1 − 2b̂.
    pub beta: f64,
    /// â = b̂ + 2/(2p − (2−p)n).
    pub a_hat: f64,
    /// ǎ = 1/(2p + n(p−2)).
    pub a_check: f64,
    /// Maximal height S.
    pub s_max: f64,
    /// Maximal radius R.
    pub r_max: f64,
    /// Intrinsicity constant K ≥ 1.
    pub k_intr: f64,
    /// s-grid ratio (> 1).
    pub s_ratio: f64,
    /// Number of s-grid points below S.
    pub s_levels: usize,
}

impl GeometryConstants {
    pub fn new(params: &ModelParams, b_hat: f64, s_max: f64, r_max: f64, k_intr: f64) -> Result<Self> {
        let n = params.n as f64;
        let p = params.p;
        let c = GeometryConstants {
            n: params.n,
            m: params.m,
            p,
            b_hat,
            beta: 1.0 - 2.0 * b_hat,
            a_hat: b_hat + 2.0 / (2.0 * p - (2.0 - p) * n),
            a_check: 1.0 / (2.0 * p + n * (p - 2.0)),
            s_max,
            r_max,
            k_intr,
            s_ratio: DEFAULT_S_RATIO,
            s_levels: 8 * DEFAULT_OCTAVES,
        };
        c.validate()?;
        Ok(c)
    }

    /// Same constants on a geometric s-grid of the given ratio and depth.
    pub fn with_s_grid(mut self, s_ratio: f64, s_levels: usize) -> Result<Self> {
        self.s_ratio = s_ratio;
        self.s_levels = s_levels;
        self.validate()?;
        Ok(self)
    }

    /// (n+2)p − 2n, positive in the admissible range.
    pub fn b0(&self) -> f64 {
        (self.n as f64 + 2.0) * self.p - 2.0 * self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        let b0 = self.b0();
        if !(self.b_hat > 0.0 && self.b_hat <= 0.5 && self.b_hat < b0) {
            return Err(Error::InvalidConstants(format!("b_hat = {} must lie in (0, min(1/2, {b0}))", self.b_hat)));
        }
        if !(self.a_hat.is_finite() && self.a_hat > self.b_hat && self.a_check.is_finite() && self.a_check > 0.0) {
            return Err(Error::InvalidConstants("exponents a_hat, a_check not finite".into()));
        }
        if !(self.s_max > 0.0 && self.r_max > 0.0) {
            return Err(Error::InvalidConstants("S and R must be positive".into()));
        }
        if !(self.k_intr >= 1.0) {
            return Err(Error::InvalidConstants(format!("K = {} must be at least 1", self.k_intr)));
        }
        if !(self.s_ratio > 1.0) || self.s_levels == 0 {
            return Err(Error::InvalidConstants("s-grid needs ratio > 1 and at least one level".into()));
        }
        Ok(())
    }

    /// Extra requirement 1 < 1/β < (m+1)/(1−m) of the level-set covering.
    pub fn validate_pipeline(&self) -> Result<()> {
        let inv = 1.0 / self.beta;
        let top = (self.m + 1.0) / (1.0 - self.m);
        if !(self.beta > 0.0 && inv > 1.0 && inv < top) {
            return Err(Error::InvalidConstants(format!("need 1 < 1/beta = {inv} < (m+1)/(1-m) = {top}")));
        }
        Ok(())
    }

    /// Ascending heights S q^{−N}, …, S q^{−1}, S.
    pub fn s_grid(&self) -> Vec<f64> {
        let n = self.s_levels;
        (0..=n).map(|i| self.s_max * self.s_ratio.powi(i as i32 - n as i32)).collect()
    }

    /// Exponent τ = max(â, 1)n + 1/b̂ of the covering threshold.
    pub fn tau_exponent(&self) -> f64 {
        self.a_hat.max(1.0) * self.n as f64 + 1.0 / self.b_hat
    }

    /// 3^{1/b̂}.
    pub fn tilde3(&self) -> f64 {
        3f64.powf(1.0 / self.b_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dimensional_instance() {
        let p = ModelParams::new(2, 0.5).unwrap();
        let c = GeometryConstants::new(&p, 0.25, 1.0, 1.0, 4.0).unwrap();
        assert!((c.a_hat - 1.25).abs() < 1e-15);
        assert!((c.b0() - 2.0).abs() < 1e-15);
        assert!((c.beta - 0.5).abs() < 1e-15);
        assert!((c.tau_exponent() - 6.5).abs() < 1e-12);
        assert!((DEFAULT_S_RATIO - 2f64.powf(0.125)).abs() < 1e-15);
        c.validate_pipeline().unwrap();
    }

    #[test]
    fn rejects_bad_b_hat() {
        let p = ModelParams::new(2, 0.5).unwrap();
        assert!(GeometryConstants::new(&p, 0.6, 1.0, 1.0, 4.0).is_err());
        assert!(GeometryConstants::new(&p, 0.0, 1.0, 1.0, 4.0).is_err());
        let q = ModelParams::new(2, 0.05).unwrap();
        // (n+2)p − 2n = 0.2
        assert!(GeometryConstants::new(&q, 0.25, 1.0, 1.0, 4.0).is_err());
        assert!(GeometryConstants::new(&p, 0.25, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn pipeline_condition() {
        // m = 0.2: (m+1)/(1−m) = 1.5; b̂ = 0.25 gives 1/β = 2.
        let p = ModelParams::new(2, 0.2).unwrap();
        let c = GeometryConstants::new(&p, 0.25, 1.0, 1.0, 4.0).unwrap();
        assert!(c.validate_pipeline().is_err());
        let c = GeometryConstants::new(&p, 0.1, 1.0, 1.0, 4.0).unwrap();
        c.validate_pipeline().unwrap();
    }

    #[test]
    fn s_grid_is_geometric() {
        let p = ModelParams::new(1, 0.5).unwrap();
        let c = GeometryConstants::new(&p, 0.25, 2.0, 1.0, 4.0).unwrap();
        let s = c.s_grid();
        assert_eq!(s.len(), 193);
        assert_eq!(*s.last().unwrap(), 2.0);
        assert!((s[0] - 2.0 * 2f64.powi(-24)).abs() < 1e-18);
    }
}
