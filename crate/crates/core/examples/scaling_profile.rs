//! Builds the intrinsic scaling profile of u^{m+1} around one point of a
//! Barenblatt solution and checks the nested-family properties.

use fdlab::geometry::{build_profile, gamma_range, verify_profile, GeometryConstants, DEFAULT_SLACK};
use fdlab::grid::{point, FieldIntegrator, ModelParams, SpaceTimeGrid};
use fdlab::solver::Barenblatt;

fn main() -> fdlab::Result<()> {
    let params = ModelParams::new(2, 0.5)?;
    let grid = SpaceTimeGrid::cube(2, 2.0, 64, (1.0, 3.0), 64)?;
    let u = Barenblatt::new(&params, 1.0)?.sample(&grid)?;
    let power = u.map("u_power", |v| v.powf(params.m + 1.0));
    let consts = GeometryConstants::new(&params, 0.25, 0.25, 0.5, 4.0)?;
    let prof = build_profile(&FieldIntegrator::new(&power), &point(&[0.3, -0.2]), 2.0, &consts)?;
    println!("{:>10} {:>10} {:>10} {:>9}", "s", "r", "theta", "intrinsic");
    for i in (0..prof.len()).step_by(6) {
        println!("{:>10.3e} {:>10.4} {:>10.4} {:>9}", prof.s[i], prof.r[i], prof.theta[i], prof.intrinsic[i]);
    }
    let report = verify_profile(&prof, &gamma_range(8), DEFAULT_SLACK);
    println!("all properties hold: {}, scale-bound slack {:?}", report.all_pass, report.f_slack);
    Ok(())
}
