//! Higher-integrability ratios of |Du^m|² on an interior cylinder of a
//! Barenblatt solution at two grid resolutions.

use fdlab::estimates::{higher_integrability_probe, EstimateFields, HigherIntegrabilityProbe, ProbeRegion};
use fdlab::grid::{point, ModelParams, SpaceTimeGrid};
use fdlab::solver::Barenblatt;

fn main() -> fdlab::Result<()> {
    let params = ModelParams::new(1, 0.5)?;
    let b = Barenblatt::new(&params, 1.0)?;
    let levels = (0..2)
        .map(|k| {
            let grid = SpaceTimeGrid::cube(1, 3.0, 128 << k, (1.0, 3.0), 32 << k)?;
            EstimateFields::new(b.sample(&grid)?, None, &params)
        })
        .collect::<fdlab::Result<Vec<_>>>()?;
    let region = ProbeRegion::Parabolic { center: point(&[0.3]), t0: 2.0, r: 0.5 };
    let table = higher_integrability_probe(&levels, &HigherIntegrabilityProbe::new(vec![1.05, 1.1, 1.2], region)?)?;
    for row in &table.rows {
        println!("level {} h {:.4} p {:.2}: lhs {:.4e} ratio {:.4e}", row.level, row.h, row.p, row.lhs, row.ratio);
    }
    for v in &table.verdicts {
        println!("p {:.2}: change {:.2e}, bounded {}", v.p, v.finest_change, v.bounded);
    }
    Ok(())
}
