use log::warn;
use serde::{Deserialize, Serialize};

/// One prediction's confidence and whether it was matched to ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedPrediction {
    pub score: f64,
    pub correct: bool,
}

/// How the precision/recall curve is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApMode {
    /// `sum_n (R_n - R_{n-1}) * P_n` over the ranked list, no interpolation.
    #[default]
    Exact,
    /// Mean of the monotone precision envelope at recalls 0, 0.01, ..., 1.
    Coco101,
}

/// Average precision of `predictions` against `total_gt` ground-truth
/// instances. Predictions are ranked by descending score; ties keep input
/// order.
pub fn average_precision(predictions: &[RankedPrediction], total_gt: u64, mode: ApMode) -> f64 {
    if total_gt == 0 {
        if !predictions.is_empty() {
            warn!("average precision with no ground truth instances is defined as 0");
        }
        return 0.0;
    }
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| predictions[b].score.total_cmp(&predictions[a].score));

    let mut curve = Vec::with_capacity(order.len());
    let mut tp = 0u64;
    for (rank, &i) in order.iter().enumerate() {
        if predictions[i].correct {
            tp += 1;
        }
        let p = tp as f64 / (rank + 1) as f64;
        let r = tp as f64 / total_gt as f64;
        curve.push((r, p));
    }

    match mode {
        ApMode::Exact => {
            let mut prev_r = 0.0;
            let mut ap = 0.0;
            for &(r, p) in &curve {
                ap += (r - prev_r) * p;
                prev_r = r;
            }
            ap
        }
        ApMode::Coco101 => {
            // running max from the right gives the precision envelope
            let mut envelope: Vec<(f64, f64)> = curve.clone();
            for i in (0..envelope.len().saturating_sub(1)).rev() {
                envelope[i].1 = envelope[i].1.max(envelope[i + 1].1);
            }
            let mut sum = 0.0;
            let mut j = 0;
            for k in 0..=100 {
                let threshold = k as f64 / 100.0;
                while j < envelope.len() && envelope[j].0 < threshold {
                    j += 1;
                }
                if j < envelope.len() {
                    sum += envelope[j].1;
                }
            }
            sum / 101.0
        }
    }
}
