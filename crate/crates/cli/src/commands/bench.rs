use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Args;
use ripstab_core::Result;

use super::tca::{StreamStats, VideoRun};
use super::{load_config, open};
use crate::manifest::RunManifest;
use crate::records::{read_records, FrameBatch, FrameGrouper};

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Prediction JSONL to replay.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, env = "RIPSTAB_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "RIPSTAB_PRESET")]
    pub preset: Option<String>,
    /// Timed passes; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub passes: usize,
    /// Write the run manifest here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Outcome of a benchmark: the median pass and the parsing time.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub median: StreamStats,
    pub parse: Duration,
    pub passes: Vec<StreamStats>,
}

pub fn execute(args: &BenchArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), args.preset.as_deref())?;
    let result = bench_file(&args.input, &cfg, args.passes.max(1))?;
    let mut manifest = RunManifest::new("bench", serde_json::to_value(&cfg)?);
    manifest.add_input(&args.input)?;
    result.median.fill_manifest(&mut manifest);
    manifest.timings.insert("parse".into(), result.parse.as_secs_f64());
    for (i, p) in result.passes.iter().enumerate() {
        manifest.timings.insert(format!("tca_pass{i}"), p.tca.as_secs_f64());
    }
    println!(
        "{} frames, {} videos [{}]: {:.2} fps (tca stage, median of {}), decode {:.3}s, encode {:.3}s, on {} x {}",
        manifest.frames,
        manifest.videos,
        manifest.resolutions.join(", "),
        manifest.fps.unwrap_or(0.0),
        result.passes.len(),
        result.median.decode.as_secs_f64(),
        result.median.encode.as_secs_f64(),
        manifest.hardware.logical_cpus,
        manifest.hardware.cpu_model,
    );
    if let Some(path) = &args.manifest {
        manifest.write(path)?;
    }
    Ok(())
}

/// Parse `input` once, then replay it `passes` times through aggregation,
/// one video after another on the calling thread.
pub fn bench_file(input: &std::path::Path, cfg: &ripstab_core::TcaConfig, passes: usize) -> Result<BenchResult> {
    cfg.validate()?;
    let t0 = Instant::now();
    let mut videos: Vec<(String, Vec<FrameBatch>)> = Vec::new();
    for batch in FrameGrouper::new(read_records(open(input)?)) {
        let batch = batch?;
        match videos.iter_mut().find(|(v, _)| *v == batch.video_id) {
            Some((_, frames)) => frames.push(batch),
            None => videos.push((batch.video_id.clone(), vec![batch])),
        }
    }
    let parse = t0.elapsed();

    let mut runs = Vec::with_capacity(passes);
    for _ in 0..passes {
        let mut stats = StreamStats::default();
        for (video, frames) in &videos {
            stats.videos.insert(video.clone());
            let mut run = VideoRun::new();
            for batch in frames {
                run.process(batch, cfg, &mut stats)?;
            }
        }
        runs.push(stats);
    }
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by_key(|&i| runs[i].tca);
    let median = runs[order[order.len() / 2]].clone();
    Ok(BenchResult {
        median,
        parse,
        passes: runs,
    })
}
