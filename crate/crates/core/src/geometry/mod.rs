//! Nested sub-intrinsic cylinder families and their properties.

mod constants;
mod engulf;
mod profile;
mod verify;

pub use constants::{GeometryConstants, DEFAULT_OCTAVES, DEFAULT_S_RATIO};
pub use engulf::{ambient_theta_check, two_point_engulfing, AmbientReport, Engulfing};
pub use profile::{
    build_profile, build_profiles, check_ambient, check_intrinsic, tilde_r, tilde_r_scan, IntrinsicCheck, ScalingProfile, TildeR,
    BISECTION_REL_TOL,
};
pub use verify::{gamma_range, verify_profile, ProfileReport, DEFAULT_SLACK};
