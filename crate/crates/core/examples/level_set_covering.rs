//! Covers the super-level sets of the intrinsic maximal function of |Du^m|² for
//! a travelling bump on the unit cylinder by disjoint stopping cylinders.

use fdlab::covering::{
    calibrate_mu_constant, cover_level_set, intrinsic_maximal, mu_threshold, unit_energy_field, unit_grid, CoveringConfig, ProfileFamily,
};
use fdlab::geometry::GeometryConstants;
use fdlab::grid::{FieldIntegrator, ModelParams, ScalarField};

fn main() -> fdlab::Result<()> {
    let (a, b) = (0.5, 1.0);
    let grid = unit_grid(1, 256, 64)?;
    let u = ScalarField::from_fn(grid, "u", |x, t| 1.0 + 0.5 * (-(x[0] - 0.1 * t).powi(2) / 0.002).exp());
    let f = ScalarField::zeros(grid, "f");
    let consts = GeometryConstants::new(&ModelParams::new(1, 0.5)?, 0.25, 1.0, 1.0, 4.0)?.with_s_grid(2f64.powf(0.25), 80)?;
    let cfg = CoveringConfig::new(&consts, 0.26, 9.0, 0.25)?;
    let family = ProfileFamily::build(&u, &consts, 1)?;
    let energy = unit_energy_field(&u, consts.m);
    let means = family.means_of(&FieldIntegrator::new(&energy))?;
    let maximal = intrinsic_maximal(&family, &means);
    let cal = calibrate_mu_constant(&[(a, b)], &u, &f, &family, &means, &cfg)?;
    let mu = mu_threshold(a, b, &u, &f, &family, cal.constant)?.mu;
    let top = maximal.max();
    println!("mu {mu:.4e}, max M(F) {top:.4e}");
    for j in 1..=4 {
        let lambda = mu * (top / mu).powf(j as f64 / 5.0);
        let res = cover_level_set(&energy, &u, &f, &family, &means, &maximal, lambda, a, b, &cfg)?;
        println!(
            "lambda {lambda:.4e}: {} level-set nodes, {} cores, cases {:?}, properties hold {}, reverse Hölder constant {:.3}",
            res.level_set_nodes,
            res.selected.len(),
            res.case_histogram,
            res.properties_hold(),
            res.max_reverse_holder
        );
    }
    Ok(())
}
