//! Midpoint quadrature over dual cells with exact fractional weights.
//!
//! A node value stands for its dual cell. A cell cut by a cylinder boundary
//! contributes the measure of the cut part, so means are those of the
//! piecewise-constant interpolant and are monotone in the integrand.

use crate::error::{Error, Result};
use crate::grid::{unit_ball_volume, Cylinder, Point, ScalarField, SpaceTimeGrid, MAX_DIM};

/// Length of (a0, a1) ∩ (b0, b1).
#[inline]
pub fn interval_overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

#[inline]
fn chord_primitive(r: f64, x: f64) -> f64 {
    let q = (x / r).clamp(-1.0, 1.0);
    let w = (r * r - x * x).max(0.0).sqrt();
    0.5 * (x * w + r * r * q.asin())
}

/// Area of the disc of radius `r` about the origin intersected with the
/// rectangle [x0, x1] × [y0, y1].
pub fn disc_rect_area(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    if r <= 0.0 || x1 <= x0 || y1 <= y0 {
        return 0.0;
    }
    let a = x0.max(-r);
    let b = x1.min(r);
    if a >= b || y0 >= r || y1 <= -r {
        return 0.0;
    }
    let mut pts = [a, b, 0.0, 0.0, 0.0, 0.0];
    let mut len = 2;
    for y in [y0, y1] {
        if y.abs() < r {
            let c = (r * r - y * y).sqrt();
            for v in [-c, c] {
                if v > a && v < b {
                    pts[len] = v;
                    len += 1;
                }
            }
        }
    }
    let pts = &mut pts[..len];
    pts.sort_by(|p, q| p.total_cmp(q));
    let mut area = 0.0;
    for win in pts.windows(2) {
        let (u, v) = (win[0], win[1]);
        if v <= u {
            continue;
        }
        let mid = 0.5 * (u + v);
        let w = (r * r - mid * mid).max(0.0).sqrt();
        let top_is_chord = w < y1;
        let bottom_is_chord = -w > y0;
        let top = if top_is_chord { w } else { y1 };
        let bottom = if bottom_is_chord { -w } else { y0 };
        if top <= bottom {
            continue;
        }
        let wint = chord_primitive(r, v) - chord_primitive(r, u);
        let t = if top_is_chord { wint } else { y1 * (v - u) };
        let bt = if bottom_is_chord { -wint } else { y0 * (v - u) };
        area += t - bt;
    }
    area.max(0.0)
}

/// Measure of the dual cell of spatial node `s` inside the ball B_r(c).
pub fn cell_ball_weight(grid: &SpaceTimeGrid, s: usize, c: &Point, r: f64) -> f64 {
    let idx = grid.unravel(s);
    match grid.n {
        1 => {
            let (e0, e1) = grid.cell_extent(0, idx[0]);
            interval_overlap(e0, e1, c[0] - r, c[0] + r)
        }
        2 => {
            let (e0, e1) = grid.cell_extent(0, idx[0]);
            let (f0, f1) = grid.cell_extent(1, idx[1]);
            let (dx0, dx1, dy0, dy1) = (e0 - c[0], e1 - c[0], f0 - c[1], f1 - c[1]);
            let far = dx0.abs().max(dx1.abs()).powi(2) + dy0.abs().max(dy1.abs()).powi(2);
            if far <= r * r {
                return (e1 - e0) * (f1 - f0);
            }
            disc_rect_area(r, dx0, dx1, dy0, dy1)
        }
        _ => {
            // Tensor subsampling; three-dimensional runs are not part of the tested scope.
            const SUB: usize = 6;
            let mut ext = [(0.0, 0.0); MAX_DIM];
            for a in 0..grid.n {
                ext[a] = grid.cell_extent(a, idx[a]);
            }
            let vol: f64 = (0..grid.n).map(|a| ext[a].1 - ext[a].0).product();
            let mut hit = 0usize;
            for i in 0..SUB.pow(grid.n as u32) {
                let mut rem = i;
                let mut d2 = 0.0;
                for (a, e) in ext.iter().enumerate().take(grid.n) {
                    let j = rem % SUB;
                    rem /= SUB;
                    let x = e.0 + (e.1 - e.0) * (j as f64 + 0.5) / SUB as f64;
                    d2 += (x - c[a]).powi(2);
                }
                if d2 < r * r {
                    hit += 1;
                }
            }
            vol * hit as f64 / SUB.pow(grid.n as u32) as f64
        }
    }
}

/// Index range of nodes along axis `a` whose dual cells may meet (x − r, x + r).
#[inline]
pub fn axis_range(grid: &SpaceTimeGrid, a: usize, x: f64, r: f64) -> (usize, usize) {
    let lo = ((x - r - grid.lo[a]) / grid.h - 0.5).floor().max(0.0);
    let hi = ((x + r - grid.lo[a]) / grid.h + 0.5).ceil().min(grid.cells[a] as f64);
    if hi < lo {
        return (1, 0);
    }
    (lo as usize, hi as usize)
}

/// Nonzero cell weights of the ball B_r(c) over spatial nodes.
pub fn ball_weights(grid: &SpaceTimeGrid, c: &Point, r: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    if r <= 0.0 {
        return out;
    }
    let mut ranges = [(0usize, 0usize); MAX_DIM];
    for (a, rg) in ranges.iter_mut().enumerate() {
        if a < grid.n {
            *rg = axis_range(grid, a, c[a], r);
            if rg.1 < rg.0 {
                return out;
            }
        }
    }
    let mut idx = [0usize; MAX_DIM];
    loop_indices(&ranges, grid.n, &mut idx, 0, &mut |idx| {
        let s = grid.spatial_index(*idx);
        let w = cell_ball_weight(grid, s, c, r);
        if w > 0.0 {
            out.push((s, w));
        }
    });
    out
}

fn loop_indices<F: FnMut(&[usize; MAX_DIM])>(
    ranges: &[(usize, usize); MAX_DIM],
    n: usize,
    idx: &mut [usize; MAX_DIM],
    a: usize,
    f: &mut F,
) {
    if a == n {
        f(idx);
        return;
    }
    for i in ranges[a].0..=ranges[a].1 {
        idx[a] = i;
        loop_indices(ranges, n, idx, a + 1, f);
    }
}

/// Nonzero weights of the time interval (a, b) over time nodes.
pub fn time_weights(grid: &SpaceTimeGrid, a: f64, b: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    if b <= a {
        return out;
    }
    let k0 = grid.time_cell_index(a);
    let k1 = grid.time_cell_index(b);
    for k in k0..=k1 {
        let (c0, c1) = grid.time_cell(k);
        let w = interval_overlap(c0, c1, a, b);
        if w > 0.0 {
            out.push((k, w));
        }
    }
    out
}

/// Quadrature weights of a cylinder intersected with the grid domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderWeights {
    pub time: Vec<(usize, f64)>,
    pub space: Vec<(usize, f64)>,
    pub time_measure: f64,
    pub space_measure: f64,
    /// Set when part of the cylinder lies outside the domain.
    pub clipped: bool,
    space_nodes: usize,
}

impl CylinderWeights {
    pub fn new(grid: &SpaceTimeGrid, q: &Cylinder) -> Result<Self> {
        let (a, b) = q.time_interval();
        let time = time_weights(grid, a, b);
        let space = ball_weights(grid, &q.center, q.radius);
        let time_measure: f64 = time.iter().map(|w| w.1).sum();
        let space_measure: f64 = space.iter().map(|w| w.1).sum();
        if time_measure <= 0.0 || space_measure <= 0.0 {
            return Err(Error::EmptyIntersection);
        }
        let full_space = unit_ball_volume(grid.n) * q.radius.powi(grid.n as i32);
        let clipped = time_measure < q.height() * (1.0 - 1e-12) || space_measure < full_space * (1.0 - 1e-9);
        Ok(CylinderWeights { time, space, time_measure, space_measure, clipped, space_nodes: grid.space_nodes() })
    }

    #[inline]
    pub fn measure(&self) -> f64 {
        self.time_measure * self.space_measure
    }

    /// ∫∫ g over the cylinder, where `g` receives the flat node index.
    pub fn integrate<F: Fn(usize) -> f64>(&self, g: F) -> f64 {
        let mut total = 0.0;
        for &(k, wt) in &self.time {
            let base = k * self.space_nodes;
            let mut inner = 0.0;
            for &(s, ws) in &self.space {
                inner += ws * g(base + s);
            }
            total += wt * inner;
        }
        total
    }

    /// ⨍⨍ g over the cylinder.
    pub fn mean<F: Fn(usize) -> f64>(&self, g: F) -> f64 {
        self.integrate(g) / self.measure()
    }

    /// ∫_B g(·, t_k) over the ball at one time node.
    pub fn slice_integral<F: Fn(usize) -> f64>(&self, k: usize, g: F) -> f64 {
        let base = k * self.space_nodes;
        self.space.iter().map(|&(s, ws)| ws * g(base + s)).sum()
    }

    /// Time nodes whose coordinates lie in the open time interval.
    pub fn interior_time_nodes(&self, grid: &SpaceTimeGrid, q: &Cylinder) -> Vec<usize> {
        let (a, b) = q.time_interval();
        self.time.iter().map(|w| w.0).filter(|&k| grid.time(k) > a && grid.time(k) < b).collect()
    }

    /// Spatial nodes whose coordinates lie in the open ball.
    pub fn interior_space_nodes(&self, grid: &SpaceTimeGrid, q: &Cylinder) -> Vec<usize> {
        self.space
            .iter()
            .map(|w| w.0)
            .filter(|&s| crate::grid::dist(grid.n, &grid.node_point(s), &q.center) < q.radius)
            .collect()
    }
}

fn check_base(field: &ScalarField, w: &CylinderWeights, exponent: f64) -> Result<()> {
    if !(exponent > 0.0) {
        return Err(Error::InvalidExponent(format!("exponent {exponent} must be positive")));
    }
    if exponent.fract() != 0.0 && !field.nonnegative {
        let ns = field.grid.space_nodes();
        for &(k, _) in &w.time {
            for &(s, _) in &w.space {
                let v = field.values[k * ns + s];
                if v < 0.0 {
                    return Err(Error::NegativeBase(v));
                }
            }
        }
    }
    Ok(())
}

#[inline]
fn abs_pow(v: f64, e: f64) -> f64 {
    if e == 1.0 {
        v.abs()
    } else if e == 2.0 {
        v * v
    } else {
        v.abs().powf(e)
    }
}

/// ∫∫_Q |g|^exponent.
pub fn cylinder_integral(field: &ScalarField, q: &Cylinder, exponent: f64) -> Result<f64> {
    let w = CylinderWeights::new(&field.grid, q)?;
    check_base(field, &w, exponent)?;
    Ok(w.integrate(|i| abs_pow(field.values[i], exponent)))
}

/// ⨍⨍_Q |g|^exponent.
pub fn cylinder_mean(field: &ScalarField, q: &Cylinder, exponent: f64) -> Result<f64> {
    let w = CylinderWeights::new(&field.grid, q)?;
    check_base(field, &w, exponent)?;
    Ok(w.mean(|i| abs_pow(field.values[i], exponent)))
}

/// ⨍⨍_Q g without absolute values.
pub fn cylinder_signed_mean(field: &ScalarField, q: &Cylinder) -> Result<f64> {
    let w = CylinderWeights::new(&field.grid, q)?;
    Ok(w.mean(|i| field.values[i]))
}

/// Weighted mean (1/‖η‖₁)∫_B g η dx on the time slice nearest `t`.
pub fn weighted_slice_mean<E: Fn(&Point) -> f64>(
    field: &ScalarField,
    t: f64,
    center: &Point,
    radius: f64,
    eta: E,
) -> Result<f64> {
    let grid = &field.grid;
    let k = grid.nearest_time_index(t);
    let ws = ball_weights(grid, center, radius);
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, w) in ws {
        let e = eta(&grid.node_point(s));
        if e < 0.0 {
            return Err(Error::HypothesisUnmet(format!("negative weight {e}")));
        }
        num += w * e * field.at(k, s);
        den += w * e;
    }
    if den <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    Ok(num / den)
}

/// Unweighted mean over B on the time slice nearest `t`.
pub fn slice_mean(field: &ScalarField, t: f64, center: &Point, radius: f64) -> Result<f64> {
    weighted_slice_mean(field, t, center, radius, |_| 1.0)
}
