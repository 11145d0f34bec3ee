use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Point, SpaceTimeGrid, MAX_DIM};

/// Per-axis coefficient d_a(x, t).
pub type AxisCoefficient = Arc<dyn Fn(usize, &Point, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StructureKind {
    ModelIdentity,
    DiagonalAnisotropic,
}

/// Vector field A(x, t, u, ξ); diagonal in ξ.
#[derive(Clone)]
pub struct StructureField {
    pub kind: StructureKind,
    pub nu: f64,
    pub l_up: f64,
    coeff: Option<AxisCoefficient>,
}

impl fmt::Debug for StructureField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StructureField").field("kind", &self.kind).field("nu", &self.nu).field("l_up", &self.l_up).finish()
    }
}

/// Extremes of A·ξ/|ξ|² and |A|/|ξ| over random samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureSample {
    pub samples: usize,
    pub min_coercivity: f64,
    pub max_growth: f64,
    pub holds: bool,
}

impl StructureField {
    /// A(x, t, u, ξ) = ξ.
    pub fn identity() -> Self {
        StructureField { kind: StructureKind::ModelIdentity, nu: 1.0, l_up: 1.0, coeff: None }
    }

    /// A = diag(d_1, …, d_n) ξ with ν ≤ d_a ≤ L claimed by the caller.
    pub fn diagonal(nu: f64, l_up: f64, coeff: AxisCoefficient) -> Result<Self> {
        if !(nu > 0.0 && nu <= l_up && l_up.is_finite()) {
            return Err(Error::InvalidParams(format!("need 0 < nu <= L < inf, got {nu}, {l_up}")));
        }
        Ok(StructureField { kind: StructureKind::DiagonalAnisotropic, nu, l_up, coeff: Some(coeff) })
    }

    #[inline]
    pub fn coefficient(&self, axis: usize, x: &Point, t: f64) -> f64 {
        match &self.coeff {
            None => 1.0,
            Some(c) => c(axis, x, t),
        }
    }

    /// A(x, t, u, ξ); the model classes here do not depend on u.
    pub fn apply(&self, n: usize, x: &Point, t: f64, xi: &[f64; MAX_DIM]) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        for a in 0..n {
            out[a] = self.coefficient(a, x, t) * xi[a];
        }
        out
    }

    /// Checks ν|ξ|² ≤ A·ξ and |A| ≤ L|ξ| at random nodes and random ξ.
    pub fn sample_structure(&self, grid: &SpaceTimeGrid, samples: usize, seed: u64) -> StructureSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n;
        let mut min_c = f64::INFINITY;
        let mut max_g: f64 = 0.0;
        for _ in 0..samples {
            let s = rng.gen_range(0..grid.space_nodes());
            let k = rng.gen_range(0..grid.time_nodes());
            let x = grid.node_point(s);
            let t = grid.time(k);
            let mut xi = [0.0; MAX_DIM];
            for v in xi.iter_mut().take(n) {
                *v = rng.gen_range(-10.0..10.0);
            }
            let norm2: f64 = xi[..n].iter().map(|v| v * v).sum();
            if norm2 == 0.0 {
                continue;
            }
            let a = self.apply(n, &x, t, &xi);
            let dot: f64 = (0..n).map(|i| a[i] * xi[i]).sum();
            let an: f64 = a[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
            min_c = min_c.min(dot / norm2);
            max_g = max_g.max(an / norm2.sqrt());
        }
        let holds = min_c >= self.nu * (1.0 - 1e-12) && max_g <= self.l_up * (1.0 + 1e-12);
        StructureSample { samples, min_coercivity: min_c, max_growth: max_g, holds }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_exact() {
        let g = SpaceTimeGrid::cube(2, 1.0, 8, (0.0, 1.0), 4).unwrap();
        let s = StructureField::identity().sample_structure(&g, 1000, 1);
        assert!(s.holds);
        assert!((s.min_coercivity - 1.0).abs() < 1e-12 && (s.max_growth - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anisotropic_bounds_hold_at_ten_thousand_samples() {
        let g = SpaceTimeGrid::cube(2, 1.0, 16, (0.0, 1.0), 8).unwrap();
        let coeff: AxisCoefficient = Arc::new(|a, x, t| 1.5 + 0.5 * ((a as f64 + 1.0) * x[0] + x[1] * t).sin());
        let a = StructureField::diagonal(1.0, 2.0, coeff).unwrap();
        let s = a.sample_structure(&g, 10_000, 7);
        assert!(s.holds, "{s:?}");
    }

    #[test]
    fn violated_claim_is_detected() {
        let g = SpaceTimeGrid::cube(1, 1.0, 8, (0.0, 1.0), 4).unwrap();
        let coeff: AxisCoefficient = Arc::new(|_, _, _| 3.0);
        let a = StructureField::diagonal(1.0, 2.0, coeff).unwrap();
        assert!(!a.sample_structure(&g, 100, 3).holds);
    }
}
