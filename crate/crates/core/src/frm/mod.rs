//! Feature refinement: re-encode each cell's refined box into the feature
//! map by sampling five points and rebuilding the map with a residual add.

mod conv;
mod feature;
mod interp;
mod reconstruct;

pub use conv::{conv2d, ConvKernel};
pub use feature::FeatureMap;
pub use interp::{accumulate_sample, bilinear_sample, clamp_point, interpolation_variant, Interpolation};
pub use reconstruct::{
    candidate_score, five_points, reconstruct, reconstruct_with, refine_step, select_best, select_best_index,
    BoxField, FrmKernels, FrmStats,
};
