use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MAX_DIM;

/// Exponents and ellipticity bounds of the equation u_t − div A(x,t,u,Du^m) = f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Spatial dimension.
    pub n: usize,
    /// Singular exponent, 0 < m < 1.
    pub m: f64,
    /// Scaling exponent p = m + 1.
    pub p: f64,
    /// Lower ellipticity bound.
    pub nu: f64,
    /// Upper ellipticity bound.
    pub l_up: f64,
}

impl ModelParams {
    /// Model case A(x,t,u,ξ) = ξ, so ν = L = 1.
    pub fn new(n: usize, m: f64) -> Result<Self> {
        Self::with_ellipticity(n, m, 1.0, 1.0)
    }

    pub fn with_ellipticity(n: usize, m: f64, nu: f64, l_up: f64) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidParams(format!("dimension {n} not in 1..={MAX_DIM}")));
        }
        let lower = Self::m_lower_bound(n);
        if !(m > lower && m < 1.0) {
            return Err(Error::InvalidParams(format!(
                "m = {m} outside the admissible range ({lower}, 1) for n = {n}"
            )));
        }
        if !(nu > 0.0 && nu <= l_up && l_up.is_finite()) {
            return Err(Error::InvalidParams(format!("need 0 < nu <= L < inf, got nu = {nu}, L = {l_up}")));
        }
        Ok(ModelParams { n, m, p: m + 1.0, nu, l_up })
    }

    /// Heat-equation limit m = 1, used only for sanity checks.
    pub fn heat_limit(n: usize) -> Self {
        ModelParams { n, m: 1.0, p: 2.0, nu: 1.0, l_up: 1.0 }
    }

    /// Lower end (n−2)_+/(n+2) of the admissible range of m.
    pub fn m_lower_bound(n: usize) -> f64 {
        (n as f64 - 2.0).max(0.0) / (n as f64 + 2.0)
    }

    pub fn is_heat_limit(&self) -> bool {
        self.m == 1.0
    }

    /// Exponent (1−m)/(1+m) linking means of u^{m+1} to the scaling θ.
    pub fn intrinsic_exponent(&self) -> f64 {
        (1.0 - self.m) / (1.0 + self.m)
    }
}

/// u^m with the continuous extension 0^m = 0.
#[inline]
pub fn pow_m(u: f64, m: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if m == 1.0 {
        u
    } else {
        u.powf(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_range() {
        assert!(ModelParams::new(2, 0.5).is_ok());
        assert!(ModelParams::new(2, 0.0).is_err());
        assert!(ModelParams::new(2, 1.0).is_err());
        assert!(ModelParams::new(3, 0.2 + 1e-3).is_ok());
        assert!(ModelParams::new(3, 0.2).is_err());
        assert!(ModelParams::new(3, 0.2 - 1e-3).is_err());
        assert!(ModelParams::with_ellipticity(2, 0.5, 2.0, 1.0).is_err());
        let p = ModelParams::new(1, 0.3).unwrap();
        assert!((p.p - 1.3).abs() < 1e-15);
        assert!(p.p > 2.0 * 1.0 / 3.0 && p.p < 2.0);
    }

    #[test]
    fn zero_power_is_zero() {
        assert_eq!(pow_m(0.0, 0.5), 0.0);
        assert_eq!(pow_m(4.0, 0.5), 2.0);
        assert_eq!(pow_m(3.0, 1.0), 3.0);
    }
}
