use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{BoxMode, FamilyMeans, ProfileFamily};
use crate::grid::quadrature::ball_weights;
use crate::grid::{dist, Cylinder, CylinderWeights, Point, ScalarField, SpaceTimeGrid};

/// A maximal function sampled at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalField {
    pub grid: SpaceTimeGrid,
    pub values: Vec<f64>,
    /// Factor by which a dyadic restriction may under-report (1 for complete families).
    pub correction: f64,
}

impl MaximalField {
    pub fn to_field(&self, name: &str) -> ScalarField {
        let mut f = ScalarField::new(self.grid, self.values.clone(), name).expect("sizes match");
        f.nonnegative = true;
        f
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn node_coords(grid: &SpaceTimeGrid, node: usize) -> (Point, f64) {
    let ns = grid.space_nodes();
    (grid.node_point(node % ns), grid.time(node / ns))
}

/// M(F)(z) = max over stored Q(s, y) ∋ z of ⨍⨍_{Q(s,y)} |F|; zero where no cylinder contains z.
pub fn intrinsic_maximal(family: &ProfileFamily, means: &FamilyMeans) -> MaximalField {
    let grid = family.grid;
    let values: Vec<f64> = (0..grid.node_count())
        .into_par_iter()
        .map(|node| {
            let (x, t) = node_coords(&grid, node);
            let mut best: f64 = 0.0;
            for p in 0..family.len() {
                if let Some(i0) = family.first_containing(p, &x, t) {
                    best = best.max(means.suffix_max[p][i0]);
                }
            }
            best
        })
        .collect();
    MaximalField { grid, values, correction: 1.0 }
}

/// Enumeration of every stored cylinder at every node, with means from direct quadrature.
pub fn intrinsic_maximal_brute(f: &ScalarField, family: &ProfileFamily) -> MaximalField {
    let grid = family.grid;
    let n = grid.n;
    let mut cyls = Vec::new();
    for p in 0..family.len() {
        for i in 0..family.profiles[p].len() {
            let q = family.cylinder(p, i);
            let w = CylinderWeights::new(&grid, &q).expect("stored cylinders meet the grid");
            cyls.push((q, w.mean(|j| f.values[j].abs())));
        }
    }
    let values = (0..grid.node_count())
        .into_par_iter()
        .map(|node| {
            let (x, t) = node_coords(&grid, node);
            cyls.iter().filter(|(q, _)| q.contains(n, &x, t)).map(|c| c.1).fold(0.0, f64::max)
        })
        .collect();
    MaximalField { grid, values, correction: 1.0 }
}

/// Time blocks (k0, k1) of consecutive dual cells.
fn time_blocks(steps: usize, mode: BoxMode) -> Vec<(usize, usize)> {
    let nt = steps + 1;
    let mut out = Vec::new();
    match mode {
        BoxMode::Exhaustive => {
            for k0 in 0..nt {
                for k1 in k0..nt {
                    out.push((k0, k1));
                }
            }
        }
        BoxMode::Dyadic => {
            let mut len = 1;
            while len <= nt {
                let mut k0 = 0;
                while k0 < nt {
                    out.push((k0, (k0 + len - 1).min(nt - 1)));
                    k0 += len;
                }
                len *= 2;
            }
        }
    }
    out
}

/// Largest admissible radius: the ball must fit in the box and in the inscribed ball about its center.
fn max_radius(grid: &SpaceTimeGrid) -> f64 {
    (0..grid.n).map(|a| 0.5 * (grid.hi[a] - grid.lo[a])).fold(f64::INFINITY, f64::min)
}

fn box_center(grid: &SpaceTimeGrid) -> Point {
    let mut c = [0.0; crate::grid::MAX_DIM];
    for a in 0..grid.n {
        c[a] = 0.5 * (grid.lo[a] + grid.hi[a]);
    }
    c
}

fn radii(grid: &SpaceTimeGrid, mode: BoxMode) -> Vec<f64> {
    let rmax = max_radius(grid);
    let mut out = Vec::new();
    match mode {
        BoxMode::Exhaustive => {
            let mut j = 1;
            while j as f64 * 0.5 * grid.h <= rmax * (1.0 + 1e-12) {
                out.push(j as f64 * 0.5 * grid.h);
                j += 1;
            }
        }
        BoxMode::Dyadic => {
            let mut r = 0.5 * grid.h;
            while r <= rmax * (1.0 + 1e-12) {
                out.push(r);
                r *= 2.0;
            }
        }
    }
    out
}

fn ball_admissible(grid: &SpaceTimeGrid, c: &Point, r: f64) -> bool {
    let n = grid.n;
    dist(n, c, &box_center(grid)) + r <= max_radius(grid) * (1.0 + 1e-12)
}

/// For one ball, the best block mean over blocks containing each time node.
fn ball_best(g: &ScalarField, c: &Point, r: f64, blocks: &[(usize, usize)]) -> Vec<f64> {
    let grid = &g.grid;
    let nt = grid.time_nodes();
    let ws = ball_weights(grid, c, r);
    let meas: f64 = ws.iter().map(|w| w.1).sum();
    let mut prefix = vec![0.0; nt + 1];
    let mut tlen = vec![0.0; nt + 1];
    for k in 0..nt {
        let (a, b) = grid.time_cell(k);
        let slice: f64 = ws.iter().map(|&(s, w)| w * g.at(k, s).abs()).sum();
        prefix[k + 1] = prefix[k] + (b - a) * slice;
        tlen[k + 1] = tlen[k] + (b - a);
    }
    let mut best = vec![0.0f64; nt];
    for &(k0, k1) in blocks {
        let mean = (prefix[k1 + 1] - prefix[k0]) / ((tlen[k1 + 1] - tlen[k0]) * meas);
        for b in &mut best[k0..=k1] {
            *b = b.max(mean);
        }
    }
    best
}

fn correction(grid: &SpaceTimeGrid, mode: BoxMode) -> f64 {
    match mode {
        BoxMode::Exhaustive => 1.0,
        BoxMode::Dyadic => 2f64.powi(grid.n as i32 + 1),
    }
}

/// M*(g) over grid-aligned time blocks times balls centered at nodes inside the inscribed ball.
pub fn box_maximal(g: &ScalarField, mode: BoxMode) -> MaximalField {
    let grid = g.grid;
    let ns = grid.space_nodes();
    let blocks = time_blocks(grid.steps, mode);
    let rs = radii(&grid, mode);
    let values = (0..ns)
        .into_par_iter()
        .fold(
            || vec![0.0f64; grid.node_count()],
            |mut acc, cs| {
                let c = grid.node_point(cs);
                for &r in &rs {
                    if !ball_admissible(&grid, &c, r) {
                        continue;
                    }
                    let best = ball_best(g, &c, r, &blocks);
                    for s in 0..ns {
                        if dist(grid.n, &grid.node_point(s), &c) < r {
                            for (k, b) in best.iter().enumerate() {
                                let v = &mut acc[k * ns + s];
                                *v = v.max(*b);
                            }
                        }
                    }
                }
                acc
            },
        )
        .reduce(|| vec![0.0f64; grid.node_count()], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect());
    MaximalField { grid, values, correction: correction(&grid, mode) }
}

/// M*(g) at a single node.
pub fn box_maximal_at(g: &ScalarField, node: usize, mode: BoxMode) -> f64 {
    let grid = g.grid;
    if g.values.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let ns = grid.space_nodes();
    let (k, s) = (node / ns, node % ns);
    let x = grid.node_point(s);
    let blocks: Vec<(usize, usize)> = time_blocks(grid.steps, mode).into_iter().filter(|&(a, b)| a <= k && k <= b).collect();
    let rs = radii(&grid, mode);
    (0..ns)
        .into_par_iter()
        .map(|cs| {
            let c = grid.node_point(cs);
            let mut best: f64 = 0.0;
            for &r in &rs {
                if dist(grid.n, &x, &c) < r && ball_admissible(&grid, &c, r) {
                    best = best.max(ball_best(g, &c, r, &blocks)[k]);
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Enumeration of every admissible box at every node with direct quadrature means.
pub fn box_maximal_brute(g: &ScalarField, mode: BoxMode) -> MaximalField {
    let grid = g.grid;
    let ns = grid.space_nodes();
    let mut boxes = Vec::new();
    for cs in 0..ns {
        let c = grid.node_point(cs);
        for r in radii(&grid, mode) {
            if !ball_admissible(&grid, &c, r) {
                continue;
            }
            for (k0, k1) in time_blocks(grid.steps, mode) {
                let (a, b) = (grid.time_cell(k0).0, grid.time_cell(k1).1);
                let q = Cylinder::centered(c, 0.5 * (a + b), 0.5 * (b - a), r);
                let w = CylinderWeights::new(&grid, &q).expect("box inside the grid");
                boxes.push((c, r, k0, k1, w.mean(|i| g.values[i].abs())));
            }
        }
    }
    let values = (0..grid.node_count())
        .into_par_iter()
        .map(|node| {
            let (k, s) = (node / ns, node % ns);
            let x = grid.node_point(s);
            boxes
                .iter()
                .filter(|b| b.2 <= k && k <= b.3 && dist(grid.n, &x, &b.0) < b.1)
                .map(|b| b.4)
                .fold(0.0, f64::max)
        })
        .collect();
    MaximalField { grid, values, correction: correction(&grid, mode) }
}
