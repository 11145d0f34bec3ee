//! Numerical laboratory for the fast diffusion equation
//! u_t − div A(x, t, u, Du^m) = f with (n−2)₊/(n+2) < m < 1.
//!
//! The crate solves the equation on uniform grids, builds intrinsic
//! space-time cylinder geometry over computed solutions, and measures the
//! constants in the energy, sup, reverse Hölder, covering and higher
//! integrability inequalities that govern such solutions.

pub mod cli;
pub mod covering;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod grid;
pub mod reduce;
pub mod solver;

pub use error::{Error, Result};
