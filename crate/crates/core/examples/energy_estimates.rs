//! Empirical constants of the energy, sup and reverse Hölder inequalities on a
//! one-dimensional Barenblatt solution.

use fdlab::estimates::{energy_estimate, reverse_holder_u, sup_bound, vertex_cylinders, EnergyVariant, EstimateFields};
use fdlab::geometry::{build_profile, GeometryConstants};
use fdlab::grid::{point, FieldIntegrator, ModelParams, SpaceTimeGrid};
use fdlab::solver::Barenblatt;

fn main() -> fdlab::Result<()> {
    let params = ModelParams::new(1, 0.5)?;
    let grid = SpaceTimeGrid::cube(1, 3.0, 256, (1.0, 3.0), 128)?;
    let u = Barenblatt::new(&params, 1.0)?.sample(&grid)?;
    let fl = EstimateFields::new(u, None, &params)?;
    let x = point(&[0.4]);
    for v in [EnergyVariant::Full, EnergyVariant::Modified] {
        let r = energy_estimate(&fl, &x, 2.0, 0.5, 1.0, 0.0, v, 1e3)?;
        println!("{:<22} lhs {:.4e}  rhs {:.4e}  constant {:?}", r.name, r.lhs, r.rhs_sum, r.empirical_constant);
    }
    let power = fl.u.map("u_power", |v| v.powf(params.m + 1.0));
    let consts = GeometryConstants::new(&params, 0.25, 0.25, 0.5, 4.0)?;
    let prof = build_profile(&FieldIntegrator::new(&power), &x, 2.0, &consts)?;
    let vc = vertex_cylinders(&fl, &prof, prof.len() - 9, 4.0, 1.0)?;
    for r in [sup_bound(&fl, &vc, 1.0, 1e3)?, sup_bound(&fl, &vc, 2.0, 1e3)?, reverse_holder_u(&fl, &vc, 1e3)?] {
        println!("{:<22} lhs {:.4e}  rhs {:.4e}  constant {:?}", r.name, r.lhs, r.rhs_sum, r.empirical_constant);
    }
    Ok(())
}
