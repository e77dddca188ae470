use std::collections::BTreeSet;

use log::warn;
use serde::{Deserialize, Serialize};

use super::model::{DenseAnnotation, KeyframeAnnotation, Provenance};
use super::sdf::signed_distance;
use crate::error::{Error, Result};
use crate::maskcore::{BinaryMask, FrameGeometry};

/// Shape at fraction `t` of the way from `a` to `b`: the zero sublevel set
/// of the blended signed distance fields. The endpoints are returned
/// unchanged; when exactly one endpoint is empty it is treated as a field
/// that is far outside everywhere, so the other shape shrinks away.
pub fn interpolate_instance(a: &BinaryMask, b: &BinaryMask, t: f64) -> Result<BinaryMask> {
    let g = a.geometry();
    g.ensure_same(&b.geometry())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("interpolation parameter {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    if a.is_empty() && b.is_empty() {
        return Ok(BinaryMask::empty(g));
    }
    if a.is_empty() || b.is_empty() {
        warn!("interpolating against an empty mask; fading the nonempty side");
    }
    let cap = (g.width() + g.height()) as f64;
    let field = |m: &BinaryMask| {
        if m.is_empty() {
            vec![cap; g.len()]
        } else {
            signed_distance(m, cap)
        }
    };
    let (da, db) = (field(a), field(b));
    let bits = da
        .iter()
        .zip(&db)
        .map(|(&x, &y)| (1.0 - t) * x + t * y <= 0.0)
        .collect();
    BinaryMask::from_bits(g, bits)
}

/// Which in-between frames [`densify`] materializes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FpsPolicy {
    /// Every frame between consecutive keyframes.
    #[default]
    Linear,
    /// Every `n`-th frame counted from the earlier keyframe.
    Stride(u64),
}

/// Expand one video's keyframes into dense annotations: keyframes come out
/// rasterized and flagged manual, in-between frames interpolated at linear
/// `t`. Instances missing from one side of a pair hold their shape until
/// the midpoint and vanish (or appear) there.
pub fn densify(
    keyframes: &[KeyframeAnnotation],
    geometry: FrameGeometry,
    policy: FpsPolicy,
) -> Result<Vec<DenseAnnotation>> {
    if let FpsPolicy::Stride(0) = policy {
        return Err(Error::InvalidInput("stride must be at least 1".into()));
    }
    let mut sorted: Vec<&KeyframeAnnotation> = keyframes.iter().collect();
    sorted.sort_by_key(|k| k.frame_index);
    for pair in sorted.windows(2) {
        if pair[0].frame_index == pair[1].frame_index {
            return Err(Error::DuplicateFrame {
                video: String::new(),
                frame: pair[0].frame_index,
            });
        }
    }

    let mut rasterized = Vec::with_capacity(sorted.len());
    for kf in &sorted {
        let mut instances = Vec::with_capacity(kf.instances.len());
        let mut ids = BTreeSet::new();
        for inst in &kf.instances {
            if !ids.insert(inst.instance_id) {
                return Err(Error::InvalidInput(format!(
                    "instance id {} repeated in frame {}",
                    inst.instance_id, kf.frame_index
                )));
            }
            instances.push((inst.instance_id, inst.segmentation.rasterize(geometry)?));
        }
        instances.sort_by_key(|(id, _)| *id);
        rasterized.push(DenseAnnotation {
            frame_index: kf.frame_index,
            instances,
            provenance: Provenance::Manual,
        });
    }

    let mut out = Vec::new();
    for (i, kf) in rasterized.iter().enumerate() {
        out.push(kf.clone());
        let Some(next) = rasterized.get(i + 1) else { break };
        let (fa, fb) = (kf.frame_index, next.frame_index);
        let step = match policy {
            FpsPolicy::Linear => 1,
            FpsPolicy::Stride(n) => n,
        };
        let ids: BTreeSet<u64> = kf
            .instances
            .iter()
            .chain(&next.instances)
            .map(|(id, _)| *id)
            .collect();
        let mut f = fa + step;
        while f < fb {
            let t = (f - fa) as f64 / (fb - fa) as f64;
            let mut instances = Vec::new();
            for &id in &ids {
                let mask = match (find(kf, id), find(next, id)) {
                    (Some(a), Some(b)) => interpolate_instance(a, b, t)?,
                    (Some(a), None) if t < 0.5 => a.clone(),
                    (None, Some(b)) if t >= 0.5 => b.clone(),
                    _ => continue,
                };
                instances.push((id, mask));
            }
            out.push(DenseAnnotation {
                frame_index: f,
                instances,
                provenance: Provenance::Interpolated,
            });
            f += step;
        }
    }
    Ok(out)
}

fn find(d: &DenseAnnotation, id: u64) -> Option<&BinaryMask> {
    d.instances.iter().find(|(i, _)| *i == id).map(|(_, m)| m)
}
