//! Grids, fields, cylinders, quadrature and discrete gradients.

mod cylinder;
mod field;
mod gradient;
mod integrator;
mod params;
pub mod quadrature;
pub mod snapshot;
mod space_time;

pub use cylinder::{Cylinder, TimeConvention};
pub use field::{ScalarField, VectorField};
pub use gradient::{discrete_gradient_of_power, grad_energy_field};
pub use integrator::FieldIntegrator;
pub use params::{pow_m, ModelParams};
pub use quadrature::{cylinder_integral, cylinder_mean, cylinder_signed_mean, slice_mean, weighted_slice_mean, CylinderWeights};
pub use space_time::{dist, point, unit_ball_volume, Point, SpaceTimeGrid, DEFAULT_NODE_BUDGET, MAX_DIM};
