//! Raster containers and the pixel-level primitives shared by every stage.

mod color;
mod components;
mod image;
mod morph;
mod resample;
mod stats;

pub use self::color::{
    hsv_pixel, hsv_to_rgb_f, lab_pixel, lab_to_rgb, lab_to_rgb_pixel, luma, rgb_to_hsv, rgb_to_lab,
    saturation, to_grayscale, to_luma,
};
pub use self::components::{connected_components, Component, Components};
pub use self::image::{clamp_u8, BinaryMask, RasterImage, RegionMasks};
pub use self::morph::{close, dilate, ellipse_half_widths, erode, morph_open_close, open};
pub use self::resample::{bilinear, bilinear_clamped, resize_area, resize_bilinear};
pub use self::stats::percentile;
pub(crate) use self::stats::percentile_from_histogram;
