//! Mask and heatmap primitives shared by every stage: grids, codecs,
//! rasterization, morphology and resampling.

mod geometry;
mod morphology;
mod png_io;
mod polygon;
mod resample;
mod rle;

pub use geometry::{iou, BinaryMask, FrameGeometry, Heatmap, PixelRect};
pub use morphology::{dilate, downsample_mask, pooled_geometry};
pub(crate) use morphology::dilate_bits;
pub use png_io::{read_mask_png, write_mask_png};
pub use polygon::{rasterize, rasterize_even_odd, rasterize_union, trace, Polygon};
pub use resample::{gaussian_blur, gaussian_kernel, upsample_heatmap};
pub(crate) use resample::{blur_values, upsample_footprint, upsample_window};
pub use rle::{counts_from_string, counts_to_string, rle_decode, rle_encode, Rle};
