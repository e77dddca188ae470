use serde::{Deserialize, Deserializer, Serialize};

use crate::error::Result;
use crate::maskcore::{rasterize_union, rle_encode, BinaryMask, FrameGeometry, Polygon, Rle};

/// Whether a frame's annotation was drawn by hand or synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Manual,
    Interpolated,
}

/// Instance shape as stored in annotation files: COCO polygon parts
/// (flat `[x0, y0, x1, y1, ...]` lists, filled as a union) or an RLE.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Segmentation {
    Polygons(Vec<Vec<f64>>),
    Rle(Rle),
}

impl<'de> Deserialize<'de> for Segmentation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Nested(Vec<Vec<f64>>),
            Flat(Vec<f64>),
            Rle(Rle),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Nested(parts) => Segmentation::Polygons(parts),
            Raw::Flat(flat) => Segmentation::Polygons(vec![flat]),
            Raw::Rle(rle) => Segmentation::Rle(rle),
        })
    }
}

impl Segmentation {
    pub fn rasterize(&self, geometry: FrameGeometry) -> Result<BinaryMask> {
        match self {
            Segmentation::Polygons(parts) => {
                let polys = parts
                    .iter()
                    .map(|p| Polygon::from_flat(p, geometry))
                    .collect::<Result<Vec<_>>>()?;
                Ok(rasterize_union(&polys, geometry))
            }
            Segmentation::Rle(rle) => {
                geometry.ensure_same(&rle.geometry()?)?;
                rle.decode()
            }
        }
    }

    pub fn from_mask(mask: &BinaryMask) -> Self {
        Segmentation::Rle(rle_encode(mask))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedInstance {
    pub instance_id: u64,
    pub segmentation: Segmentation,
}

/// A hand-drawn annotation of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyframeAnnotation {
    pub frame_index: u64,
    pub instances: Vec<AnnotatedInstance>,
}

/// Rasterized annotation of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseAnnotation {
    pub frame_index: u64,
    /// Sorted by instance id.
    pub instances: Vec<(u64, BinaryMask)>,
    pub provenance: Provenance,
}
