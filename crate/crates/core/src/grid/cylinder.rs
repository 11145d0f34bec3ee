use serde::{Deserialize, Serialize};

use crate::grid::{dist, unit_ball_volume, Point};

/// How the time parameter of a cylinder maps to its time interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimeConvention {
    /// (t₀ − τ, t₀ + τ): total length 2τ.
    Centered2Tau,
    /// (t₀ − s/2, t₀ + s/2): total length s.
    ConstructionS,
}

/// Space-time cylinder B_ρ(x₀) × time interval around t₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub center: Point,
    pub t0: f64,
    /// Time parameter: the half-width τ or the total length s, per `convention`.
    pub tau: f64,
    pub radius: f64,
    pub convention: TimeConvention,
}

impl Cylinder {
    /// Q_{τ,ρ}(z₀) = (t₀−τ, t₀+τ) × B_ρ(x₀).
    pub fn centered(center: Point, t0: f64, tau: f64, radius: f64) -> Self {
        Cylinder { center, t0, tau, radius, convention: TimeConvention::Centered2Tau }
    }

    /// (t₀−s/2, t₀+s/2) × B_ρ(x₀).
    pub fn construction(center: Point, t0: f64, s: f64, radius: f64) -> Self {
        Cylinder { center, t0, tau: s, radius, convention: TimeConvention::ConstructionS }
    }

    /// (t_top − length, t_top) × B_ρ(x₀).
    pub fn backward(center: Point, t_top: f64, length: f64, radius: f64) -> Self {
        Self::centered(center, t_top - 0.5 * length, 0.5 * length, radius)
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        match self.convention {
            TimeConvention::Centered2Tau => self.tau,
            TimeConvention::ConstructionS => 0.5 * self.tau,
        }
    }

    /// Total time length.
    #[inline]
    pub fn height(&self) -> f64 {
        2.0 * self.half_width()
    }

    #[inline]
    pub fn time_interval(&self) -> (f64, f64) {
        let w = self.half_width();
        (self.t0 - w, self.t0 + w)
    }

    /// Lebesgue measure (unclipped).
    pub fn measure(&self, n: usize) -> f64 {
        self.height() * unit_ball_volume(n) * self.radius.powi(n as i32)
    }

    /// Whether (x, t) lies in the open cylinder.
    #[inline]
    pub fn contains(&self, n: usize, x: &Point, t: f64) -> bool {
        (t - self.t0).abs() < self.half_width() && dist(n, x, &self.center) < self.radius
    }

    /// Whether `other` ⊂ `self` as closed sets.
    pub fn contains_cylinder(&self, n: usize, other: &Cylinder) -> bool {
        let (a, b) = self.time_interval();
        let (c, d) = other.time_interval();
        a <= c && d <= b && dist(n, &self.center, &other.center) + other.radius <= self.radius
    }

    /// Whether the open cylinders share a point.
    pub fn intersects(&self, n: usize, other: &Cylinder) -> bool {
        let (a, b) = self.time_interval();
        let (c, d) = other.time_interval();
        a < d && c < b && dist(n, &self.center, &other.center) < self.radius + other.radius
    }

    /// Same set in the centered convention.
    pub fn to_centered(&self) -> Cylinder {
        Cylinder::centered(self.center, self.t0, self.half_width(), self.radius)
    }

    /// Same set in the construction convention.
    pub fn to_construction(&self) -> Cylinder {
        Cylinder::construction(self.center, self.t0, self.height(), self.radius)
    }

    /// Concentric cylinder with time length and radius scaled.
    pub fn scaled(&self, time_factor: f64, radius_factor: f64) -> Cylinder {
        Cylinder { tau: self.tau * time_factor, radius: self.radius * radius_factor, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::point;

    #[test]
    fn conventions_agree_on_sets() {
        let a = Cylinder::centered(point(&[0.0, 0.0]), 1.0, 0.5, 1.0);
        let b = Cylinder::construction(point(&[0.0, 0.0]), 1.0, 1.0, 1.0);
        assert_eq!(a.time_interval(), b.time_interval());
        assert_eq!(a.to_construction(), b);
        assert_eq!(b.to_centered(), a);
        assert!((a.measure(2) - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn inclusion_and_intersection() {
        let big = Cylinder::centered(point(&[0.0]), 0.0, 2.0, 2.0);
        let small = Cylinder::centered(point(&[0.5]), 0.5, 0.5, 0.5);
        assert!(big.contains_cylinder(1, &small));
        assert!(!small.contains_cylinder(1, &big));
        let far = Cylinder::centered(point(&[3.0]), 0.0, 1.0, 0.9);
        assert!(!big.intersects(1, &far));
        let touching = Cylinder::centered(point(&[3.0]), 0.0, 1.0, 1.0);
        assert!(!big.intersects(1, &touching));
        assert!(big.contains(1, &point(&[1.9]), 1.9));
        assert!(!big.contains(1, &point(&[2.0]), 0.0));
    }

    #[test]
    fn backward_cylinder() {
        let q = Cylinder::backward(point(&[0.0]), 1.0, 0.4, 1.0);
        let (a, b) = q.time_interval();
        assert!((a - 0.6).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
    }
}
