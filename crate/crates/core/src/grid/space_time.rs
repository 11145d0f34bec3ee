use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest spatial dimension the types support.
pub const MAX_DIM: usize = 3;

/// A spatial point; components beyond the grid dimension are zero.
pub type Point = [f64; MAX_DIM];

/// Default bound on the number of space-time nodes.
pub const DEFAULT_NODE_BUDGET: usize = 1 << 26;

/// Uniform tensor grid over an axis-aligned box times a time interval.
///
/// Nodes sit at `lo + i h` in space and `t_start + k dt` in time. Each node
/// owns the dual cell of half-width h/2 (dt/2 in time) clipped to the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub n: usize,
    pub lo: Point,
    pub hi: Point,
    /// Cells per axis; the node count along an axis is `cells + 1`.
    pub cells: [usize; MAX_DIM],
    pub h: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Number of time steps; there are `steps + 1` time nodes.
    pub steps: usize,
    pub dt: f64,
}

impl SpaceTimeGrid {
    pub fn new(lo: &[f64], hi: &[f64], cells: &[usize], t_range: (f64, f64), steps: usize) -> Result<Self> {
        Self::with_budget(lo, hi, cells, t_range, steps, DEFAULT_NODE_BUDGET)
    }

    pub fn with_budget(
        lo: &[f64],
        hi: &[f64],
        cells: &[usize],
        t_range: (f64, f64),
        steps: usize,
        budget: usize,
    ) -> Result<Self> {
        let n = lo.len();
        if n == 0 || n > MAX_DIM || hi.len() != n || cells.len() != n {
            return Err(Error::InvalidGrid(format!("inconsistent dimension {n}")));
        }
        let mut g = SpaceTimeGrid {
            n,
            lo: [0.0; MAX_DIM],
            hi: [0.0; MAX_DIM],
            cells: [0; MAX_DIM],
            h: 0.0,
            t_start: t_range.0,
            t_end: t_range.1,
            steps,
            dt: 0.0,
        };
        for a in 0..n {
            if cells[a] == 0 || !(hi[a] > lo[a]) {
                return Err(Error::InvalidGrid(format!("axis {a}: empty extent or zero cells")));
            }
            g.lo[a] = lo[a];
            g.hi[a] = hi[a];
            g.cells[a] = cells[a];
        }
        g.h = (hi[0] - lo[0]) / cells[0] as f64;
        for a in 1..n {
            let ha = (hi[a] - lo[a]) / cells[a] as f64;
            if (ha - g.h).abs() > 1e-12 * g.h {
                return Err(Error::InvalidGrid(format!("non-uniform spacing: {ha} vs {}", g.h)));
            }
        }
        if steps == 0 || !(t_range.1 > t_range.0) {
            return Err(Error::InvalidGrid("empty time range or zero steps".into()));
        }
        g.dt = (t_range.1 - t_range.0) / steps as f64;
        let nodes = g.node_count();
        if nodes > budget {
            return Err(Error::GridTooLarge { nodes, budget });
        }
        Ok(g)
    }

    /// Cube [−half, half]^n with `cells` cells per axis.
    pub fn cube(n: usize, half: f64, cells: usize, t_range: (f64, f64), steps: usize) -> Result<Self> {
        let lo = vec![-half; n];
        let hi = vec![half; n];
        let c = vec![cells; n];
        Self::new(&lo, &hi, &c, t_range, steps)
    }

    /// Nodes along spatial axis `a` (1 for unused axes).
    #[inline]
    pub fn axis_nodes(&self, a: usize) -> usize {
        if a < self.n {
            self.cells[a] + 1
        } else {
            1
        }
    }

    #[inline]
    pub fn space_nodes(&self) -> usize {
        (0..MAX_DIM).map(|a| self.axis_nodes(a)).product()
    }

    #[inline]
    pub fn time_nodes(&self) -> usize {
        self.steps + 1
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.space_nodes() * self.time_nodes()
    }

    /// Row-major stride of spatial axis `a` (axis 0 slowest).
    #[inline]
    pub fn stride(&self, a: usize) -> usize {
        ((a + 1)..MAX_DIM).map(|b| self.axis_nodes(b)).product()
    }

    #[inline]
    pub fn coord(&self, a: usize, i: usize) -> f64 {
        if i == self.cells[a] {
            self.hi[a]
        } else {
            self.lo[a] + (self.hi[a] - self.lo[a]) * (i as f64 / self.cells[a] as f64)
        }
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            self.t_start + (self.t_end - self.t_start) * (k as f64 / self.steps as f64)
        }
    }

    #[inline]
    pub fn spatial_index(&self, idx: [usize; MAX_DIM]) -> usize {
        let mut s = 0;
        for (a, &i) in idx.iter().enumerate() {
            s = s * self.axis_nodes(a) + i;
        }
        s
    }

    #[inline]
    pub fn unravel(&self, mut s: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for a in (0..MAX_DIM).rev() {
            let na = self.axis_nodes(a);
            idx[a] = s % na;
            s /= na;
        }
        idx
    }

    #[inline]
    pub fn node_point(&self, s: usize) -> Point {
        let idx = self.unravel(s);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.n {
            x[a] = self.coord(a, idx[a]);
        }
        x
    }

    #[inline]
    pub fn node_index(&self, k: usize, s: usize) -> usize {
        k * self.space_nodes() + s
    }

    /// Dual cell of node `i` along axis `a`, clipped to the box.
    #[inline]
    pub fn cell_extent(&self, a: usize, i: usize) -> (f64, f64) {
        let x = self.coord(a, i);
        ((x - 0.5 * self.h).max(self.lo[a]), (x + 0.5 * self.h).min(self.hi[a]))
    }

    /// Dual time cell of time node `k`, clipped to the time range.
    #[inline]
    pub fn time_cell(&self, k: usize) -> (f64, f64) {
        let t = self.time(k);
        ((t - 0.5 * self.dt).max(self.t_start), (t + 0.5 * self.dt).min(self.t_end))
    }

    /// Index of the time node nearest to `t` (clamped to the range).
    pub fn nearest_time_index(&self, t: f64) -> usize {
        let k = ((t - self.t_start) / self.dt).round();
        k.clamp(0.0, self.steps as f64) as usize
    }

    /// Index of the dual time cell containing `t` (clamped).
    #[inline]
    pub fn time_cell_index(&self, t: f64) -> usize {
        let k = ((t - self.t_start) / self.dt + 0.5).floor();
        k.clamp(0.0, self.steps as f64) as usize
    }

    /// Index of the spatial node nearest to `x` along axis `a` (clamped).
    pub fn nearest_axis_index(&self, a: usize, x: f64) -> usize {
        let i = ((x - self.lo[a]) / self.h).round();
        i.clamp(0.0, self.cells[a] as f64) as usize
    }

    /// Whether the point lies in the closed space-time domain.
    pub fn contains(&self, x: &Point, t: f64) -> bool {
        (0..self.n).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a]) && t >= self.t_start && t <= self.t_end
    }

    /// Whether spatial node `s` lies on the boundary of the box.
    pub fn is_boundary(&self, s: usize) -> bool {
        let idx = self.unravel(s);
        (0..self.n).any(|a| idx[a] == 0 || idx[a] == self.cells[a])
    }

    /// Spatial volume of the box.
    pub fn box_volume(&self) -> f64 {
        (0..self.n).map(|a| self.hi[a] - self.lo[a]).product()
    }

    /// Same spatial box and time range with every axis refined by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let lo: Vec<f64> = (0..self.n).map(|a| self.lo[a]).collect();
        let hi: Vec<f64> = (0..self.n).map(|a| self.hi[a]).collect();
        let cells: Vec<usize> = (0..self.n).map(|a| self.cells[a] * factor).collect();
        Self::new(&lo, &hi, &cells, (self.t_start, self.t_end), self.steps * factor)
    }
}

/// Volume ω_n of the unit ball.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Euclidean distance over the first `n` components.
#[inline]
pub fn dist(n: usize, a: &Point, b: &Point) -> f64 {
    let mut d2 = 0.0;
    for i in 0..n {
        let d = a[i] - b[i];
        d2 += d * d;
    }
    d2.sqrt()
}

/// Pads a slice into a [`Point`].
pub fn point(x: &[f64]) -> Point {
    let mut p = [0.0; MAX_DIM];
    p[..x.len()].copy_from_slice(x);
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_exact() {
        let g = SpaceTimeGrid::new(&[-1.0, 0.3], &[0.7, 2.0], &[17, 17], (0.1, 0.9), 7).unwrap();
        assert_eq!(g.coord(0, 0), -1.0);
        assert_eq!(g.coord(0, 17), 0.7);
        assert_eq!(g.coord(1, 17), 2.0);
        assert_eq!(g.time(7), 0.9);
        assert_eq!(g.space_nodes(), 18 * 18);
    }

    #[test]
    fn index_roundtrip() {
        let g = SpaceTimeGrid::cube(2, 1.0, 4, (0.0, 1.0), 3).unwrap();
        for s in 0..g.space_nodes() {
            assert_eq!(g.spatial_index(g.unravel(s)), s);
        }
        assert_eq!(g.stride(0), 5);
        assert_eq!(g.stride(1), 1);
    }

    #[test]
    fn rejects_nonuniform_and_budget() {
        assert!(SpaceTimeGrid::new(&[0.0, 0.0], &[1.0, 2.0], &[4, 4], (0.0, 1.0), 2).is_err());
        assert!(matches!(
            SpaceTimeGrid::with_budget(&[0.0], &[1.0], &[100], (0.0, 1.0), 100, 1000),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn dual_cells_tile_domain() {
        let g = SpaceTimeGrid::cube(1, 1.0, 8, (0.0, 1.0), 4).unwrap();
        let total: f64 = (0..=8).map(|i| {
            let (a, b) = g.cell_extent(0, i);
            b - a
        }).sum();
        assert!((total - 2.0).abs() < 1e-14);
        let tt: f64 = (0..=4).map(|k| {
            let (a, b) = g.time_cell(k);
            b - a
        }).sum();
        assert!((tt - 1.0).abs() < 1e-14);
    }
}
