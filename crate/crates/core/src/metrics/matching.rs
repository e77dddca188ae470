use serde::Serialize;

use crate::detection::Detection;
use crate::error::Result;
use crate::maskcore::{iou, BinaryMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    pub prediction: usize,
    pub ground_truth: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchResult {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub matched_pairs: Vec<MatchedPair>,
    /// Per prediction (input order): whether it was matched.
    pub correct: Vec<bool>,
}

/// Greedy matching by descending score: each prediction takes the unmatched
/// ground truth of highest IoU at or above `iou_threshold` (lowest index on
/// ties). Equal scores keep input order.
pub fn match_instances(
    predictions: &[Detection],
    ground_truth: &[BinaryMask],
    iou_threshold: f64,
) -> Result<MatchResult> {
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| predictions[b].score.total_cmp(&predictions[a].score));

    let mut taken = vec![false; ground_truth.len()];
    let mut out = MatchResult {
        correct: vec![false; predictions.len()],
        ..Default::default()
    };
    for p in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in ground_truth.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let v = iou(&predictions[p].mask, gt)?;
            if v >= iou_threshold && v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        match best {
            Some((g, v)) => {
                taken[g] = true;
                out.correct[p] = true;
                out.tp += 1;
                out.matched_pairs.push(MatchedPair {
                    prediction: p,
                    ground_truth: g,
                    iou: v,
                });
            }
            None => out.fp += 1,
        }
    }
    out.fn_ = ground_truth.len() as u64 - out.tp;
    Ok(out)
}
