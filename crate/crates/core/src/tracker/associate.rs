use super::hungarian::{hungarian, Assignment, CostMatrix};
use crate::error::Result;
use crate::maskcore::{iou, BinaryMask};

/// Cost `1 - IoU` between every track mask (rows) and detection mask (cols).
pub fn cost_matrix(tracks: &[&BinaryMask], detections: &[&BinaryMask]) -> Result<CostMatrix> {
    let mut data = Vec::with_capacity(tracks.len() * detections.len());
    for t in tracks {
        for d in detections {
            data.push(1.0 - iou(t, d)?);
        }
    }
    CostMatrix::new(tracks.len(), detections.len(), data)
}

/// Optimal IoU matching followed by gating: matched pairs with
/// `iou < iou_gate` are split back into the unmatched sets.
pub fn associate(
    tracks: &[&BinaryMask],
    detections: &[&BinaryMask],
    iou_gate: f64,
) -> Result<Assignment> {
    let cost = cost_matrix(tracks, detections)?;
    let raw = hungarian(&cost);
    let mut out = Assignment {
        matches: Vec::with_capacity(raw.matches.len()),
        unmatched_tracks: raw.unmatched_tracks,
        unmatched_detections: raw.unmatched_detections,
    };
    for (t, d) in raw.matches {
        if iou(tracks[t], detections[d])? >= iou_gate {
            out.matches.push((t, d));
        } else {
            out.unmatched_tracks.push(t);
            out.unmatched_detections.push(d);
        }
    }
    out.unmatched_tracks.sort_unstable();
    out.unmatched_detections.sort_unstable();
    Ok(out)
}
