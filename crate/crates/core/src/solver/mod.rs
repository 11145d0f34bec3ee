//! Finite-difference solver for u_t − div A(x, t, u, Du^m) = f and exact solutions.

mod barenblatt;
mod residual;
mod scheme;
mod structure;

pub use barenblatt::{barenblatt, Barenblatt};
pub use residual::{weak_residual, Bump, ResidualReport};
pub use scheme::{
    conjugate_gradient, explicit_dt_bound, solve, step, Boundary, Scheme, Solution, SolveStats, SolverConfig, StepOutcome,
    StepStats, MIN_FLOOR,
};
pub use structure::{AxisCoefficient, StructureField, StructureKind, StructureSample};
