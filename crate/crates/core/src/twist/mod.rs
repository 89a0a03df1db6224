//! Jump function, twist maps, rotation block decomposition and localized rotations.

pub mod jump;
mod localized;
mod sod;
mod twist_map;

pub use jump::{jump, jump_eval, jump_inverse};
pub use localized::{
    fit_c1, localization_error, localization_error_bound, localized_rotation, C1Fit, LocalizedRotation,
    DECOMPOSITION_TOL,
};
pub use sod::{random_sod, sod_block_decompose, BlockDecomposition, SOdMatrix, SOD_TOL};
pub use twist_map::{twist_map, PlaneProfile, TwistMap, TwistProfile};
