//! Resampling, fixed-size ROI cropping, gray-level discretization and the LoG variant.

mod discretize;
mod log_filter;
mod resample;
mod roi;

pub use discretize::{discretize, DiscretizedVolume, Discretization};
pub use log_filter::{gaussian_blur, gaussian_kernel, log_filter, reflect_index, LogFiltered};
pub use resample::{resample, resample_mask, Interpolation};
pub use roi::{crop_mask, crop_volume, roi_from_mask, RoiBox};
