use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ap::{average_precision, ApMode, RankedPrediction};
use super::fbeta::{f_beta, precision, recall};
use super::matching::match_instances;
use crate::annotations::Provenance;
use crate::detection::Detection;
use crate::error::{Error, Result};
use crate::maskcore::BinaryMask;

/// Frame address within a multi-video stream.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub video_id: String,
    pub frame_index: u64,
}

impl StreamKey {
    pub fn new(video_id: impl Into<String>, frame_index: u64) -> Self {
        Self {
            video_id: video_id.into(),
            frame_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthFrame {
    pub masks: Vec<BinaryMask>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    /// Operating point for the point precision / recall columns.
    pub score_threshold: f64,
    pub ap_mode: ApMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            score_threshold: 0.5,
            ap_mode: ApMode::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMetrics {
    pub precision: f64,
    pub recall: f64,
    pub ap50: f64,
    pub f1: f64,
    pub f2: f64,
    pub frames_evaluated: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub predictions: u64,
    pub ground_truth: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub per_video: BTreeMap<String, VideoMetrics>,
    pub aggregate: VideoMetrics,
    /// Throughput of the pipeline that produced the predictions, when known.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fps: Option<f64>,
}

#[derive(Default)]
struct Tally {
    tp: u64,
    fp: u64,
    fn_: u64,
    ranked: Vec<RankedPrediction>,
    total_gt: u64,
    frames: u64,
}

impl Tally {
    fn absorb(&mut self, other: &Tally) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.ranked.extend_from_slice(&other.ranked);
        self.total_gt += other.total_gt;
        self.frames += other.frames;
    }

    fn finish(&self, mode: ApMode) -> VideoMetrics {
        let p = precision(self.tp, self.fp);
        let r = recall(self.tp, self.fn_);
        VideoMetrics {
            precision: p,
            recall: r,
            ap50: average_precision(&self.ranked, self.total_gt, mode),
            f1: f_beta(p, r, 1.0),
            f2: f_beta(p, r, 2.0),
            frames_evaluated: self.frames,
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
            predictions: self.ranked.len() as u64,
            ground_truth: self.total_gt,
        }
    }
}

/// Score a prediction stream against ground truth on manually annotated
/// frames only. Every predicted frame must have an annotation record
/// (manual or interpolated); annotated frames without predictions count as
/// empty predictions.
pub fn evaluate_stream(
    predictions: &BTreeMap<StreamKey, Vec<Detection>>,
    ground_truth: &BTreeMap<StreamKey, GroundTruthFrame>,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let missing: Vec<(String, u64)> = predictions
        .keys()
        .filter(|k| !ground_truth.contains_key(k))
        .map(|k| (k.video_id.clone(), k.frame_index))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingAnnotation(missing));
    }

    let mut videos: BTreeMap<String, Tally> = BTreeMap::new();
    for key in predictions.keys() {
        videos.entry(key.video_id.clone()).or_default();
    }
    let empty = Vec::new();
    for (key, gt) in ground_truth {
        let tally = videos.entry(key.video_id.clone()).or_default();
        if gt.provenance != Provenance::Manual {
            continue;
        }
        let preds = predictions.get(key).unwrap_or(&empty);
        let ranked = match_instances(preds, &gt.masks, cfg.iou_threshold)?;
        tally.ranked.extend(preds.iter().zip(&ranked.correct).map(|(d, &correct)| {
            RankedPrediction {
                score: d.score,
                correct,
            }
        }));
        let kept: Vec<Detection> = preds
            .iter()
            .filter(|d| d.score >= cfg.score_threshold)
            .cloned()
            .collect();
        let point = match_instances(&kept, &gt.masks, cfg.iou_threshold)?;
        tally.tp += point.tp;
        tally.fp += point.fp;
        tally.fn_ += point.fn_;
        tally.total_gt += gt.masks.len() as u64;
        tally.frames += 1;
    }

    let mut pooled = Tally::default();
    let mut per_video = BTreeMap::new();
    for (video, tally) in &videos {
        pooled.absorb(tally);
        per_video.insert(video.clone(), tally.finish(cfg.ap_mode));
    }
    Ok(EvalReport {
        config: *cfg,
        per_video,
        aggregate: pooled.finish(cfg.ap_mode),
        fps: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskcore::FrameGeometry;

    fn geom() -> FrameGeometry {
        FrameGeometry::new(16, 4).unwrap()
    }

    fn band(x0: usize, x1: usize) -> BinaryMask {
        BinaryMask::from_fn(geom(), |x, _| (x0..x1).contains(&x))
    }

    fn gt(masks: Vec<BinaryMask>, provenance: Provenance) -> GroundTruthFrame {
        GroundTruthFrame { masks, provenance }
    }

    fn stream(frames: &[(u64, Vec<BinaryMask>)]) -> BTreeMap<StreamKey, Vec<Detection>> {
        frames
            .iter()
            .map(|(i, ms)| {
                let dets = ms.iter().map(|m| Detection::new(m.clone(), 0.9).unwrap()).collect();
                (StreamKey::new("v", *i), dets)
            })
            .collect()
    }

    #[test]
    fn perfect_predictions() {
        let frames = [(0, vec![band(0, 4)]), (1, vec![band(2, 8), band(10, 14)])];
        let truth = frames
            .iter()
            .map(|(i, ms)| (StreamKey::new("v", *i), gt(ms.clone(), Provenance::Manual)))
            .collect();
        let r = evaluate_stream(&stream(&frames), &truth, &EvalConfig::default()).unwrap();
        let a = &r.aggregate;
        assert_eq!((a.precision, a.recall, a.ap50, a.f1, a.f2), (1.0, 1.0, 1.0, 1.0, 1.0));
        assert_eq!(a.frames_evaluated, 2);
    }

    #[test]
    fn empty_predictions() {
        let truth = [(StreamKey::new("v", 0), gt(vec![band(0, 4)], Provenance::Manual))].into();
        let r = evaluate_stream(&BTreeMap::new(), &truth, &EvalConfig::default()).unwrap();
        assert_eq!((r.aggregate.precision, r.aggregate.recall, r.aggregate.f2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn missing_annotation_lists_frames() {
        let truth = [(StreamKey::new("v", 0), gt(vec![], Provenance::Manual))].into();
        let preds = stream(&[(0, vec![]), (3, vec![band(0, 2)]), (5, vec![])]);
        match evaluate_stream(&preds, &truth, &EvalConfig::default()) {
            Err(Error::MissingAnnotation(frames)) => {
                assert_eq!(frames, vec![("v".to_string(), 3), ("v".to_string(), 5)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn interpolated_frames_are_ignored() {
        let truth: BTreeMap<_, _> = [
            (StreamKey::new("v", 0), gt(vec![band(0, 4)], Provenance::Manual)),
            (StreamKey::new("v", 1), gt(vec![band(0, 4)], Provenance::Interpolated)),
        ]
        .into();
        let a = evaluate_stream(&stream(&[(0, vec![band(0, 4)]), (1, vec![band(0, 4)])]), &truth, &EvalConfig::default()).unwrap();
        let b = evaluate_stream(&stream(&[(0, vec![band(0, 4)]), (1, vec![band(9, 16)])]), &truth, &EvalConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.aggregate.frames_evaluated, 1);
    }

    #[test]
    fn score_threshold_sets_operating_point() {
        let truth = [(StreamKey::new("v", 0), gt(vec![band(0, 4)], Provenance::Manual))].into();
        let preds = [(StreamKey::new("v", 0), vec![Detection::new(band(0, 4), 0.3).unwrap()])].into();
        let r = evaluate_stream(&preds, &truth, &EvalConfig::default()).unwrap();
        assert_eq!(r.aggregate.recall, 0.0);
        assert_eq!(r.aggregate.ap50, 1.0);
    }
}
