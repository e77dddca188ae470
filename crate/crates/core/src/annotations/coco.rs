use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use super::interpolate::{densify, FpsPolicy};
use super::model::{AnnotatedInstance, KeyframeAnnotation, Provenance, Segmentation};
use crate::error::{Error, Result};
use crate::maskcore::FrameGeometry;
use crate::metrics::{GroundTruthFrame, StreamKey};

/// COCO-style annotation file extended with per-frame video addressing and
/// provenance. Fields this crate does not know about survive a round trip.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CocoDataset {
    #[serde(default)]
    pub images: Vec<CocoImage>,
    #[serde(default)]
    pub annotations: Vec<CocoAnnotation>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    #[serde(deserialize_with = "string_or_number")]
    pub video_id: String,
    pub frame_index: u64,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub provenance: Provenance,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub instance_id: u64,
    pub segmentation: Segmentation,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        S(String),
        N(u64),
    }
    Ok(match Id::deserialize(d)? {
        Id::S(s) => s,
        Id::N(n) => n.to_string(),
    })
}

impl CocoImage {
    pub fn geometry(&self) -> Result<FrameGeometry> {
        FrameGeometry::new(self.width, self.height)
    }

    pub fn key(&self) -> StreamKey {
        StreamKey::new(self.video_id.clone(), self.frame_index)
    }
}

impl CocoDataset {
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    /// Images keyed by frame address; duplicates are an error.
    fn images_by_key(&self) -> Result<BTreeMap<StreamKey, &CocoImage>> {
        let mut out = BTreeMap::new();
        for img in &self.images {
            if out.insert(img.key(), img).is_some() {
                return Err(Error::DuplicateFrame {
                    video: img.video_id.clone(),
                    frame: img.frame_index,
                });
            }
        }
        Ok(out)
    }

    fn annotations_by_image(&self) -> Result<BTreeMap<u64, Vec<&CocoAnnotation>>> {
        let ids: BTreeSet<u64> = self.images.iter().map(|i| i.id).collect();
        let mut out: BTreeMap<u64, Vec<&CocoAnnotation>> = BTreeMap::new();
        for ann in &self.annotations {
            if !ids.contains(&ann.image_id) {
                return Err(Error::InvalidInput(format!(
                    "annotation {} refers to unknown image {}",
                    ann.id, ann.image_id
                )));
            }
            out.entry(ann.image_id).or_default().push(ann);
        }
        Ok(out)
    }

    /// Manual keyframes grouped per video, with each video's frame geometry.
    pub fn keyframes(&self) -> Result<BTreeMap<String, (FrameGeometry, Vec<KeyframeAnnotation>)>> {
        let by_image = self.annotations_by_image()?;
        let mut out: BTreeMap<String, (FrameGeometry, Vec<KeyframeAnnotation>)> = BTreeMap::new();
        for (key, img) in self.images_by_key()? {
            if img.provenance != Provenance::Manual {
                continue;
            }
            let g = img.geometry()?;
            let entry = out.entry(key.video_id.clone()).or_insert_with(|| (g, Vec::new()));
            entry.0.ensure_same(&g)?;
            let instances = by_image
                .get(&img.id)
                .map(|anns| {
                    anns.iter()
                        .map(|a| AnnotatedInstance {
                            instance_id: a.instance_id,
                            segmentation: a.segmentation.clone(),
                        })
                        .collect()
                })
                .unwrap_or_default();
            entry.1.push(KeyframeAnnotation {
                frame_index: key.frame_index,
                instances,
            });
        }
        Ok(out)
    }

    /// Append interpolated records for every frame between manual keyframes
    /// that has no image record yet. Existing records are kept verbatim.
    pub fn densified(&self, policy: FpsPolicy) -> Result<CocoDataset> {
        let existing = self.images_by_key()?;
        let mut out = self.clone();
        let mut next_image = self.images.iter().map(|i| i.id + 1).max().unwrap_or(1);
        let mut next_ann = self.annotations.iter().map(|a| a.id + 1).max().unwrap_or(1);
        for (video, (geometry, keyframes)) in self.keyframes()? {
            let dense = densify(&keyframes, geometry, policy).map_err(|e| match e {
                Error::DuplicateFrame { frame, .. } => Error::DuplicateFrame { video: video.clone(), frame },
                other => other,
            })?;
            for frame in dense {
                if frame.provenance != Provenance::Interpolated
                    || existing.contains_key(&StreamKey::new(video.clone(), frame.frame_index))
                {
                    continue;
                }
                let image_id = next_image;
                next_image += 1;
                out.images.push(CocoImage {
                    id: image_id,
                    video_id: video.clone(),
                    frame_index: frame.frame_index,
                    width: geometry.width(),
                    height: geometry.height(),
                    provenance: Provenance::Interpolated,
                    extra: Map::new(),
                });
                for (instance_id, mask) in &frame.instances {
                    out.annotations.push(CocoAnnotation {
                        id: next_ann,
                        image_id,
                        instance_id: *instance_id,
                        segmentation: Segmentation::from_mask(mask),
                        extra: Map::new(),
                    });
                    next_ann += 1;
                }
            }
        }
        Ok(out)
    }

    /// Rasterized ground truth for evaluation, one entry per image.
    pub fn ground_truth(&self) -> Result<BTreeMap<StreamKey, GroundTruthFrame>> {
        let by_image = self.annotations_by_image()?;
        let mut out = BTreeMap::new();
        for (key, img) in self.images_by_key()? {
            let g = img.geometry()?;
            let mut masks = Vec::new();
            for ann in by_image.get(&img.id).into_iter().flatten() {
                let m = ann.segmentation.rasterize(g).map_err(|e| {
                    e.at(format!("annotation {} of {}#{}", ann.id, img.video_id, img.frame_index))
                })?;
                masks.push(m);
            }
            out.insert(
                key,
                GroundTruthFrame {
                    masks,
                    provenance: img.provenance,
                },
            );
        }
        Ok(out)
    }
}
