use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use ripstab_core::annotations::{CocoDataset, Provenance};
use ripstab_core::metrics::{evaluate_stream, f_beta, ApMode, EvalConfig, EvalReport, GroundTruthFrame, StreamKey};
use ripstab_core::{Detection, Error, FrameGeometry, Result};
use serde::Serialize;

use super::{create, open};
use crate::manifest::RunManifest;
use crate::records::{batch_geometry, decode_batch, read_records, FrameGrouper};

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Prediction JSONL (a COCO JSON is also accepted; its instances score 1).
    #[arg(long, required_unless_present = "fbeta_only")]
    pub pred: Option<PathBuf>,
    /// COCO-style annotation JSON, or a `.jsonl` stream whose frames are all
    /// taken as manual annotations.
    #[arg(long, required_unless_present = "fbeta_only")]
    pub gt: Option<PathBuf>,
    #[arg(long, env = "RIPSTAB_IOU_THRESH", default_value_t = 0.5)]
    pub iou_thresh: f64,
    /// Score cutoff for the point precision / recall columns.
    #[arg(long, env = "RIPSTAB_SCORE_THRESH", default_value_t = 0.5)]
    pub score_thresh: f64,
    /// 101-point interpolated AP instead of the exact step sum.
    #[arg(long)]
    pub coco_interp: bool,
    /// Report JSON to write (the text table always goes to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-video CSV to write.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Manifest of the run that produced the predictions; its fps is copied
    /// into the report.
    #[arg(long)]
    pub run_manifest: Option<PathBuf>,
    /// Only compute F1/F2 for the `--pr` pairs.
    #[arg(long)]
    pub fbeta_only: bool,
    /// `PRECISION,RECALL` pair for `--fbeta-only`; repeatable.
    #[arg(long, value_parser = parse_pr)]
    pub pr: Vec<(f64, f64)>,
}

fn parse_pr(s: &str) -> std::result::Result<(f64, f64), String> {
    let (p, r) = s.split_once(',').ok_or_else(|| format!("expected PRECISION,RECALL, got {s:?}"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| (0.0..=1.0).contains(x))
            .ok_or_else(|| format!("{v:?} is not a fraction in [0, 1]"))
    };
    Ok((parse(p)?, parse(r)?))
}

#[derive(Debug, Serialize)]
struct FbetaRow {
    precision: f64,
    recall: f64,
    f1: f64,
    f2: f64,
}

pub fn execute(args: &EvalArgs) -> Result<()> {
    if args.fbeta_only {
        return fbeta_only(args);
    }
    let (pred, gt) = match (&args.pred, &args.gt) {
        (Some(p), Some(g)) => (p, g),
        _ => return Err(Error::InvalidInput("--pred and --gt are required".into())),
    };
    for (name, v) in [("--iou-thresh", args.iou_thresh), ("--score-thresh", args.score_thresh)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidInput(format!("{name} {v} outside [0, 1]")));
        }
    }
    let cfg = EvalConfig {
        iou_threshold: args.iou_thresh,
        score_threshold: args.score_thresh,
        ap_mode: if args.coco_interp { ApMode::Coco101 } else { ApMode::Exact },
    };
    let truth = load_truth(gt)?;
    let predictions = if is_stream(pred) {
        load_predictions(pred, &truth)?
    } else {
        coco_predictions(pred)?
    };
    let mut report = evaluate_stream(&predictions, &truth, &cfg)?;
    if let Some(path) = &args.run_manifest {
        report.fps = RunManifest::load(path)?.fps;
    }

    print!("{}", render_table(&report));
    if let Some(path) = &args.out {
        let mut f = create(path)?;
        serde_json::to_writer_pretty(&mut f, &report)?;
        f.write_all(b"\n")?;
        f.flush()?;
    }
    if let Some(path) = &args.csv {
        write_csv(path, &report)?;
    }
    Ok(())
}

fn fbeta_only(args: &EvalArgs) -> Result<()> {
    if args.pr.is_empty() {
        return Err(Error::InvalidInput("--fbeta-only needs at least one --pr PRECISION,RECALL".into()));
    }
    let rows: Vec<FbetaRow> = args
        .pr
        .iter()
        .map(|&(p, r)| FbetaRow {
            precision: p,
            recall: r,
            f1: f_beta(p, r, 1.0),
            f2: f_beta(p, r, 2.0),
        })
        .collect();
    println!("{:>9} {:>9} {:>9} {:>9}", "precision", "recall", "f1", "f2");
    for row in &rows {
        println!("{:>9.3} {:>9.3} {:>9.4} {:>9.4}", row.precision, row.recall, row.f1, row.f2);
    }
    if let Some(path) = &args.out {
        let mut f = create(path)?;
        serde_json::to_writer_pretty(&mut f, &rows)?;
        f.write_all(b"\n")?;
        f.flush()?;
    }
    Ok(())
}

fn is_stream(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("jsonl"))
}

fn load_coco(path: &Path) -> Result<BTreeMap<StreamKey, GroundTruthFrame>> {
    let dataset = CocoDataset::load(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    dataset.ground_truth()
}

/// Annotations from COCO JSON, or from a JSONL stream where every frame
/// present (including all-null frames) counts as a manual annotation.
pub fn load_truth(path: &Path) -> Result<BTreeMap<StreamKey, GroundTruthFrame>> {
    if !is_stream(path) {
        return load_coco(path);
    }
    let mut geometries: BTreeMap<String, Option<FrameGeometry>> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for batch in FrameGrouper::new(read_records(open(path)?)) {
        let batch = batch?;
        let geometry = geometries.entry(batch.video_id.clone()).or_insert(None);
        let frame = decode_batch(&batch, geometry)?;
        out.insert(
            StreamKey::new(batch.video_id.clone(), batch.frame_index),
            GroundTruthFrame {
                masks: frame.detections.into_iter().map(|d| d.mask).collect(),
                provenance: Provenance::Manual,
            },
        );
    }
    Ok(out)
}

fn coco_predictions(path: &Path) -> Result<BTreeMap<StreamKey, Vec<Detection>>> {
    let mut out = BTreeMap::new();
    for (key, frame) in load_coco(path)? {
        if frame.masks.is_empty() {
            continue;
        }
        let dets = frame.masks.into_iter().map(|m| Detection::new(m, 1.0)).collect::<Result<_>>()?;
        out.insert(key, dets);
    }
    Ok(out)
}

/// Predictions keyed by frame. Frames whose records carry no instance are
/// not predictions and need no annotation.
pub fn load_predictions(
    path: &Path,
    truth: &BTreeMap<StreamKey, GroundTruthFrame>,
) -> Result<BTreeMap<StreamKey, Vec<Detection>>> {
    let mut geometries: BTreeMap<String, Option<FrameGeometry>> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for batch in FrameGrouper::new(read_records(open(path)?)) {
        let batch = batch?;
        if batch.instances.is_empty() {
            continue;
        }
        let key = StreamKey::new(batch.video_id.clone(), batch.frame_index);
        let geometry = geometries.entry(batch.video_id.clone()).or_insert(None);
        if geometry.is_none() && batch_geometry(&batch)?.is_none() {
            // polygons only: take the frame size from the annotation
            *geometry = truth.get(&key).and_then(|gt| gt.masks.first()).map(|m| m.geometry());
        }
        let frame = decode_batch(&batch, geometry)?;
        out.insert(key, frame.detections);
    }
    Ok(out)
}

pub fn render_table(report: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<24} {:>9} {:>9} {:>9} {:>9} {:>9} {:>8}",
        "video", "precision", "recall", "ap50", "f1", "f2", "frames"
    );
    let row = |s: &mut String, name: &str, m: &ripstab_core::metrics::VideoMetrics| {
        let _ = writeln!(
            s,
            "{:<24} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8}",
            name, m.precision, m.recall, m.ap50, m.f1, m.f2, m.frames_evaluated
        );
    };
    for (video, m) in &report.per_video {
        row(&mut s, video, m);
    }
    row(&mut s, "(all)", &report.aggregate);
    if let Some(fps) = report.fps {
        let _ = writeln!(s, "fps {fps:.2}");
    }
    s
}

fn write_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["video_id", "precision", "recall", "ap50", "f1", "f2", "frames_evaluated", "tp", "fp", "fn"])
        .map_err(csv_err)?;
    for (video, m) in report.per_video.iter().chain([(&"(all)".to_string(), &report.aggregate)]) {
        w.write_record([
            video.clone(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.ap50.to_string(),
            m.f1.to_string(),
            m.f2.to_string(),
            m.frames_evaluated.to_string(),
            m.tp.to_string(),
            m.fp.to_string(),
            m.fn_.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
