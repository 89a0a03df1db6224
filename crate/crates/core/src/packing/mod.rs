//! Ball packings, dyadic sampling of rotation fields, pasted localized
//! rotations and the level-by-level approximation driver.

mod ball;
mod cell;
mod field;
mod index;
mod theorem_b;
mod transfer;

pub use ball::{
    pairwise_disjoint, unit_ball_volume, vitali_pack, vitali_pack_best_effort, vitali_pack_with, Ball, BallPacking,
    PackOptions, PACKING_MARGIN,
};
pub use cell::{
    build_cell_diffeo, build_cell_diffeo_with, ApproximantReport, CellBudget, CellDiffeo, CellOptions, PastedRotations,
    C1_FIT_RATIOS, DET_TOL, MAX_ETA, MIN_ETA,
};
pub use field::{dyadic_rotation_sample, splits_per_axis, DyadicSample, FieldFn, RotationField};
pub use theorem_b::{theorem_b_sequence, LevelReport, TheoremBOptions};
pub use transfer::{transfer_by_homeo, TransferOptions, TransferReport, TransferRow};
