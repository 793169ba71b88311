//! Spatial and intensity normalization.
//!
//! Pipelines are named `<intensity>_<spatial>` with intensity one of `no`,
//! `int` (divide by the whole-volume mean) or `max` (divide by the mean of
//! the brightest 3 % of voxels) and spatial one of `u` (unregistered) or `w`
//! (warped through a supplied affine registration). The spatial step always
//! runs first.

mod affine;
mod intensity;
mod pipeline;

pub use affine::{affine_resample, make_similarity, resample_to_input_shape, AffineMatrix};
pub use intensity::{
    normalize, normalize_integral, normalize_max, top_fraction_count, top_fraction_mean, IntensityNormKind,
    DEFAULT_TOP_FRACTION,
};
pub use pipeline::{apply_pipeline, Intensity, PipelineTag, Spatial};
