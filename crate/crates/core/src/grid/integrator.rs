//! Repeated cylinder integrals of one field.
//!
//! Prefix sums in time (per node) and along the last spatial axis (per row)
//! reduce a ball integral to one row lookup per row of fully covered cells plus
//! exact weights on the cut cells near the sphere.

use crate::error::{Error, Result};
use crate::grid::quadrature::{axis_range, ball_weights, cell_ball_weight, interval_overlap};
use crate::grid::{unit_ball_volume, Cylinder, Point, ScalarField, SpaceTimeGrid};

/// Fast exact-weight integrals of |g| over cylinders.
#[derive(Debug, Clone)]
pub struct FieldIntegrator {
    grid: SpaceTimeGrid,
    vals: Vec<f64>,
    node_prefix: Vec<f64>,
    row_slice: Vec<f64>,
    row_time: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl FieldIntegrator {
    /// Integrator of |g|.
    pub fn new(field: &ScalarField) -> Self {
        let grid = field.grid;
        let vals: Vec<f64> = field.values.iter().map(|v| v.abs()).collect();
        let ns = grid.space_nodes();
        let nt = grid.time_nodes();
        let cols = grid.axis_nodes(grid.n - 1);
        let rows = ns / cols;
        let len_t: Vec<f64> = (0..nt).map(|k| {
            let (a, b) = grid.time_cell(k);
            b - a
        }).collect();
        let len_x: Vec<f64> = (0..cols).map(|i| {
            let (a, b) = grid.cell_extent(grid.n - 1, i);
            b - a
        }).collect();

        let mut node_prefix = vec![0.0; (nt + 1) * ns];
        for k in 0..nt {
            for s in 0..ns {
                node_prefix[(k + 1) * ns + s] = node_prefix[k * ns + s] + len_t[k] * vals[k * ns + s];
            }
        }
        let stride = cols + 1;
        let mut row_slice = vec![0.0; nt * rows * stride];
        for k in 0..nt {
            for row in 0..rows {
                let base = (k * rows + row) * stride;
                let src = k * ns + row * cols;
                for i in 0..cols {
                    row_slice[base + i + 1] = row_slice[base + i] + len_x[i] * vals[src + i];
                }
            }
        }
        let mut row_time = vec![0.0; (nt + 1) * rows * stride];
        let plane = rows * stride;
        for k in 0..nt {
            for j in 0..plane {
                row_time[(k + 1) * plane + j] = row_time[k * plane + j] + len_t[k] * row_slice[k * plane + j];
            }
        }
        FieldIntegrator { grid, vals, node_prefix, row_slice, row_time, rows, cols }
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    #[inline]
    fn clip_time(&self, t: f64) -> f64 {
        t.clamp(self.grid.t_start, self.grid.t_end)
    }

    /// ∫_a^b |g|(x_s, τ) dτ for spatial node `s`.
    #[inline]
    pub fn time_integral(&self, s: usize, a: f64, b: f64) -> f64 {
        let a = self.clip_time(a);
        let b = self.clip_time(b);
        if b <= a {
            return 0.0;
        }
        let k = self.grid.time_cell_index(a);
        if k == self.grid.time_cell_index(b) {
            return (b - a) * self.vals[k * self.grid.space_nodes() + s];
        }
        self.node_primitive(s, b) - self.node_primitive(s, a)
    }

    #[inline]
    fn node_primitive(&self, s: usize, t: f64) -> f64 {
        let ns = self.grid.space_nodes();
        let k = self.grid.time_cell_index(t);
        let start = self.grid.time_cell(k).0;
        self.node_prefix[k * ns + s] + (t - start) * self.vals[k * ns + s]
    }

    #[inline]
    fn row_primitive(&self, row: usize, i: usize, t: f64) -> f64 {
        let stride = self.cols + 1;
        let plane = self.rows * stride;
        let k = self.grid.time_cell_index(t);
        let start = self.grid.time_cell(k).0;
        let j = row * stride + i;
        self.row_time[k * plane + j] + (t - start) * self.row_slice[k * plane + j]
    }

    /// ∫_a^b Σ_{i0 ≤ i < i1} len_x(i) |g|(row, i, τ) dτ.
    #[inline]
    fn row_integral(&self, row: usize, i0: usize, i1: usize, a: f64, b: f64) -> f64 {
        if i1 <= i0 {
            return 0.0;
        }
        let k = self.grid.time_cell_index(a);
        if k == self.grid.time_cell_index(b) {
            let base = (k * self.rows + row) * (self.cols + 1);
            return (b - a) * (self.row_slice[base + i1] - self.row_slice[base + i0]);
        }
        (self.row_primitive(row, i1, b) - self.row_primitive(row, i0, b))
            - (self.row_primitive(row, i1, a) - self.row_primitive(row, i0, a))
    }

    /// Columns whose cells lie inside [lo_x, hi_x] along the last axis.
    fn full_columns(&self, lo_x: f64, hi_x: f64) -> (usize, usize) {
        let g = &self.grid;
        let a = g.n - 1;
        if hi_x <= lo_x {
            return (1, 0);
        }
        let inside = |i: usize| {
            let (e0, e1) = g.cell_extent(a, i);
            e0 >= lo_x && e1 <= hi_x
        };
        let last = self.cols - 1;
        let mut i0 = (((lo_x - g.lo[a]) / g.h + 0.5).ceil().max(0.0) as usize).min(last);
        while i0 > 0 && g.cell_extent(a, i0 - 1).0 >= lo_x {
            i0 -= 1;
        }
        while i0 <= last && g.cell_extent(a, i0).0 < lo_x {
            i0 += 1;
        }
        let mut i1 = (((hi_x - g.lo[a]) / g.h - 0.5).floor().max(0.0) as usize).min(last);
        while i1 < last && g.cell_extent(a, i1 + 1).1 <= hi_x {
            i1 += 1;
        }
        while g.cell_extent(a, i1).1 > hi_x {
            if i1 == 0 {
                return (1, 0);
            }
            i1 -= 1;
        }
        if i0 > i1 || !inside(i0) || !inside(i1) {
            return (1, 0);
        }
        (i0, i1)
    }

    /// ∫_a^b ∫_{B_r(c)} |g| with the time interval clipped to the grid.
    pub fn ball_integral(&self, c: &Point, r: f64, a: f64, b: f64) -> f64 {
        let g = &self.grid;
        let a = self.clip_time(a);
        let b = self.clip_time(b);
        if b <= a || r <= 0.0 {
            return 0.0;
        }
        match g.n {
            1 => {
                let (lo, hi) = axis_range(g, 0, c[0], r);
                if hi < lo {
                    return 0.0;
                }
                let (f0, f1) = self.full_columns(c[0] - r, c[0] + r);
                let mut total = 0.0;
                if f0 <= f1 {
                    total += self.row_integral(0, f0, f1 + 1, a, b);
                }
                for i in lo..=hi {
                    if f0 <= f1 && i >= f0 && i <= f1 {
                        continue;
                    }
                    let (e0, e1) = g.cell_extent(0, i);
                    let w = interval_overlap(e0, e1, c[0] - r, c[0] + r);
                    if w > 0.0 {
                        total += w * self.time_integral(i, a, b);
                    }
                }
                total
            }
            2 => {
                let (j_lo, j_hi) = axis_range(g, 0, c[0], r);
                if j_hi < j_lo {
                    return 0.0;
                }
                let mut total = 0.0;
                for j in j_lo..=j_hi {
                    let (y0, y1) = g.cell_extent(0, j);
                    let (dy0, dy1) = (y0 - c[0], y1 - c[0]);
                    if dy1 <= -r || dy0 >= r {
                        continue;
                    }
                    let max_abs = dy0.abs().max(dy1.abs());
                    let min_abs = if dy0 <= 0.0 && dy1 >= 0.0 { 0.0 } else { dy0.abs().min(dy1.abs()) };
                    let w_max = (r * r - min_abs * min_abs).max(0.0).sqrt();
                    let (f0, f1) = if max_abs < r {
                        let w_min = (r * r - max_abs * max_abs).sqrt();
                        self.full_columns(c[1] - w_min, c[1] + w_min)
                    } else {
                        (1, 0)
                    };
                    if f0 <= f1 {
                        total += (y1 - y0) * self.row_integral(j, f0, f1 + 1, a, b);
                    }
                    let (i_lo, i_hi) = axis_range(g, 1, c[1], w_max);
                    if i_hi < i_lo {
                        continue;
                    }
                    for i in i_lo..=i_hi {
                        if f0 <= f1 && i >= f0 && i <= f1 {
                            continue;
                        }
                        let s = j * self.cols + i;
                        let w = cell_ball_weight(g, s, c, r);
                        if w > 0.0 {
                            total += w * self.time_integral(s, a, b);
                        }
                    }
                }
                total
            }
            _ => ball_weights(g, c, r).iter().map(|&(s, w)| w * self.time_integral(s, a, b)).sum(),
        }
    }

    /// Measure of B_r(c) inside the box; ω_n r^n when the ball is interior.
    pub fn ball_measure(&self, c: &Point, r: f64) -> f64 {
        let g = &self.grid;
        let interior = (0..g.n).all(|a| c[a] - r >= g.lo[a] && c[a] + r <= g.hi[a]);
        if interior {
            unit_ball_volume(g.n) * r.powi(g.n as i32)
        } else {
            ball_weights(g, c, r).iter().map(|w| w.1).sum()
        }
    }

    /// ∫∫_Q |g| over Q intersected with the domain.
    pub fn integral(&self, q: &Cylinder) -> f64 {
        let (a, b) = q.time_interval();
        self.ball_integral(&q.center, q.radius, a, b)
    }

    /// Measure of Q intersected with the domain.
    pub fn measure(&self, q: &Cylinder) -> f64 {
        let (a, b) = q.time_interval();
        let len = (self.clip_time(b) - self.clip_time(a)).max(0.0);
        len * self.ball_measure(&q.center, q.radius)
    }

    /// ⨍⨍_Q |g| over Q intersected with the domain.
    pub fn mean(&self, q: &Cylinder) -> Result<f64> {
        let m = self.measure(q);
        if m <= 0.0 {
            return Err(Error::EmptyIntersection);
        }
        Ok(self.integral(q) / m)
    }
}
