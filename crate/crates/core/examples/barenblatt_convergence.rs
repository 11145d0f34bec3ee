//! Solves the fast diffusion equation from Barenblatt data on three grids and
//! prints the relative L¹ error at the final time with the observed order.

use std::sync::Arc;

use fdlab::grid::{ModelParams, SpaceTimeGrid};
use fdlab::reduce::pairwise_sum;
use fdlab::solver::{solve, Barenblatt, Boundary, SolverConfig, StructureField};

fn main() -> fdlab::Result<()> {
    let params = ModelParams::new(2, 0.5)?;
    let b = Barenblatt::new(&params, 1.0)?;
    let mut previous: Option<f64> = None;
    println!("{:>6} {:>6} {:>12} {:>8}", "cells", "steps", "rel L1", "order");
    for k in 0..3 {
        let cells = 16 << k;
        let grid = SpaceTimeGrid::cube(2, 2.0, cells, (1.0, 1.5), 16 << k)?;
        let exact = b.sample(&grid)?;
        let cfg = SolverConfig { boundary: Boundary::Trace(Arc::new(move |x, t| b.value(x, t))), ..Default::default() };
        let sol = solve(&params, &grid, exact.slice(0), None, &StructureField::identity(), &cfg)?;
        let last = grid.steps;
        let diff: Vec<f64> = sol.field.slice(last).iter().zip(exact.slice(last)).map(|(a, e)| (a - e).abs()).collect();
        let err = pairwise_sum(&diff) / pairwise_sum(exact.slice(last));
        let order = previous.map(|p| format!("{:.3}", (p / err).log2())).unwrap_or_default();
        println!("{cells:>6} {:>6} {err:>12.4e} {order:>8}", grid.steps);
        previous = Some(err);
    }
    Ok(())
}
