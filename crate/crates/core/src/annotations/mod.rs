//! Ground-truth model, keyframe densification by signed-distance blending,
//! and the COCO-style JSON interchange.

mod coco;
mod interpolate;
mod model;
mod sdf;

pub use coco::{CocoAnnotation, CocoDataset, CocoImage};
pub use interpolate::{densify, interpolate_instance, FpsPolicy};
pub use model::{AnnotatedInstance, DenseAnnotation, KeyframeAnnotation, Provenance, Segmentation};
pub use sdf::{signed_distance, squared_distance_transform};
