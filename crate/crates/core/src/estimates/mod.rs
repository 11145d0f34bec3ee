//! Both sides of the energy, boundedness, reverse Hölder and mean-change
//! inequalities evaluated on discrete fields.

mod bounds;
mod elementary;
mod energy;
pub mod fields;
mod probe;
mod regime;
mod report;
mod reverse;

pub use bounds::{
    intrinsic_consistency, jensen_holds, reverse_holder_u, stored_index, sup_bound, vertex_cylinders, ConsistencyCheck,
    VertexCylinders,
};
pub use elementary::{aux_integral_bounds, mean_change_checks, power_inequality, AuxBounds, MeanChangeData, MeanChangeParams};
pub use energy::{energy_estimate, subintrinsic_energy, truncation_energy, EnergyVariant, ZetaSpec};
pub use fields::EstimateFields;
pub use probe::{
    higher_integrability_probe, HigherIntegrabilityProbe, ProbeRegion, ProbeRow, ProbeTable, ProbeVerdict, BOUNDED_CHANGE,
};
pub use regime::{regime_classify, Regime, RegimeLabel};
pub use reverse::{grad_reverse_holder, time_mean_switch, EtaPower};
pub use report::{InequalityReport, NamedCylinder, Outcome, ZERO_TOL};
