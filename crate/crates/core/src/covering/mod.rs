//! Intrinsic maximal functions, Vitali selection and the stopping-time
//! covering of the level sets of |Du^m|².

mod config;
mod cover;
mod family;
mod maximal;
mod rescale;
mod stopping;
mod vitali;

pub use config::{BoxMode, CoveringConfig};
pub use cover::{
    calibrate_mu_constant, cover_level_set, mu_threshold, unit_cylinder, AbsorptionCheck, CoveringRecord, CoveringResult,
    MuCalibration, MuSample, MuThreshold,
};
pub use family::{lattice_points, FamilyMeans, ProfileFamily};
pub use maximal::{box_maximal, box_maximal_at, box_maximal_brute, intrinsic_maximal, intrinsic_maximal_brute, MaximalField};
pub use rescale::{interpolate, rescale_to_unit, unit_energy_field, unit_grid, UnitPair, UnitScaling};
pub use stopping::{
    classify_and_dilate, half_cylinder, stopping_cylinder, stopping_cylinder_brute, CaseLabel, StoppingCylinder, Witness,
};
pub use vitali::{check_cover, node_volume, parabolic_item, vitali_select, CoverCheck, VitaliItem, PARABOLIC_C1};
