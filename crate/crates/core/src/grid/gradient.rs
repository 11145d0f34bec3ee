use rayon::prelude::*;

use crate::grid::{pow_m, ScalarField, VectorField};

/// Spatial gradient of v = u^m: central differences inside, second-order
/// one-sided differences on the boundary of the box.
pub fn discrete_gradient_of_power(u: &ScalarField, m: f64) -> VectorField {
    let grid = u.grid;
    let n = grid.n;
    let ns = grid.space_nodes();
    let v: Vec<f64> = u.values.par_iter().map(|x| pow_m(*x, m)).collect();
    let mut out = vec![0.0; grid.node_count() * n];
    let h = grid.h;
    out.par_chunks_mut(ns * n).enumerate().for_each(|(k, chunk)| {
        let vs = &v[k * ns..(k + 1) * ns];
        for s in 0..ns {
            let idx = grid.unravel(s);
            for a in 0..n {
                let st = grid.stride(a);
                let last = grid.cells[a];
                let i = idx[a];
                let d = if last == 1 {
                    (vs[s - i * st + st] - vs[s - i * st]) / h
                } else if i == 0 {
                    (-3.0 * vs[s] + 4.0 * vs[s + st] - vs[s + 2 * st]) / (2.0 * h)
                } else if i == last {
                    (3.0 * vs[s] - 4.0 * vs[s - st] + vs[s - 2 * st]) / (2.0 * h)
                } else {
                    (vs[s + st] - vs[s - st]) / (2.0 * h)
                };
                chunk[s * n + a] = d;
            }
        }
    });
    VectorField { grid, values: out }
}

/// F = |Du^m|² nodewise.
pub fn grad_energy_field(u: &ScalarField, m: f64) -> ScalarField {
    discrete_gradient_of_power(u, m).norm_squared("grad_energy")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceTimeGrid;

    #[test]
    fn constant_has_zero_gradient() {
        let g = SpaceTimeGrid::cube(2, 1.0, 8, (0.0, 1.0), 2).unwrap();
        let f = grad_energy_field(&ScalarField::constant(g, 2.5, "c"), 0.5);
        assert!(f.values.iter().all(|v| *v < 1e-24));
    }

    #[test]
    fn square_root_of_square() {
        let g = SpaceTimeGrid::cube(2, 0.5, 16, (0.0, 1.0), 1).unwrap();
        let u = ScalarField::from_fn(g, "u", |x, _| (1.0 + x[0]).powi(2));
        let du = discrete_gradient_of_power(&u, 0.5);
        for node in 0..g.node_count() {
            let d = du.at(node);
            assert!((d[0] - 1.0).abs() < 1e-12);
            assert!(d[1].abs() < 1e-12);
        }
    }

    #[test]
    fn linear_heat_limit() {
        let g = SpaceTimeGrid::cube(1, 1.0, 10, (0.0, 1.0), 1).unwrap();
        let u = ScalarField::from_fn(g, "u", |x, _| 3.0 * x[0] + 5.0);
        let f = grad_energy_field(&u, 1.0);
        assert!(f.values.iter().all(|v| (v - 9.0).abs() < 1e-12));
    }
}
