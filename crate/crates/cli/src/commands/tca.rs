use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use clap::Args;
use log::info;
use ripstab_core::{Error, FrameDetections, FrameGeometry, Result, TcaConfig, TcaVideoState};

use super::{create, load_config, manifest_path, open};
use crate::manifest::RunManifest;
use crate::records::{decode_batch, encode_outputs, read_records, write_record, FrameBatch, FrameGrouper};

#[derive(Debug, Clone, Args)]
pub struct TcaArgs {
    /// Prediction JSONL.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Stabilized JSONL to write.
    #[arg(long, short)]
    pub out: PathBuf,
    /// TOML or JSON config file.
    #[arg(long, env = "RIPSTAB_CONFIG")]
    pub config: Option<PathBuf>,
    /// Named preset instead of a config file: `identity`,
    /// `fast-gain-fast-decay`, `slow-gain-slow-decay` or `fast-gain-slow-decay`.
    #[arg(long, env = "RIPSTAB_PRESET")]
    pub preset: Option<String>,
    /// Manifest location (default: `<out>.manifest.json`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn execute(args: &TcaArgs, jobs: usize) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), args.preset.as_deref())?;
    let input = open(&args.input)?;
    let mut out = create(&args.out)?;
    let started = Instant::now();
    let stats = run_stream(input, &mut out, &cfg, jobs)?;
    out.flush()?;
    let wall = started.elapsed();

    let mut manifest = RunManifest::new("tca", serde_json::to_value(&cfg)?);
    manifest.add_input(&args.input)?;
    stats.fill_manifest(&mut manifest);
    manifest.timings.insert("wall".into(), wall.as_secs_f64());
    manifest.write(&args.manifest.clone().unwrap_or_else(|| manifest_path(&args.out)))?;
    info!(
        "{} frames from {} videos, {:.1} fps",
        stats.frames,
        stats.videos.len(),
        manifest.fps.unwrap_or(0.0)
    );
    Ok(())
}

/// Counters and per-stage time, summed over workers.
#[derive(Debug, Default, Clone)]
pub struct StreamStats {
    pub frames: u64,
    pub videos: BTreeSet<String>,
    pub resolutions: BTreeSet<String>,
    pub decode: Duration,
    pub tca: Duration,
    pub encode: Duration,
}

impl StreamStats {
    fn absorb(&mut self, other: StreamStats) {
        self.frames += other.frames;
        self.videos.extend(other.videos);
        self.resolutions.extend(other.resolutions);
        self.decode += other.decode;
        self.tca += other.tca;
        self.encode += other.encode;
    }

    pub fn fill_manifest(&self, m: &mut RunManifest) {
        m.frames = self.frames;
        m.videos = self.videos.len() as u64;
        m.resolutions = self.resolutions.iter().cloned().collect();
        m.timings.insert("decode".into(), self.decode.as_secs_f64());
        m.timings.insert("tca".into(), self.tca.as_secs_f64());
        m.timings.insert("encode".into(), self.encode.as_secs_f64());
        let secs = self.tca.as_secs_f64();
        m.fps = (self.frames > 0 && secs > 0.0).then(|| self.frames as f64 / secs);
    }
}

/// Aggregation state of one video inside a worker.
pub(crate) struct VideoRun {
    pub(crate) geometry: Option<FrameGeometry>,
    pub(crate) state: Option<TcaVideoState>,
}

impl VideoRun {
    pub(crate) fn new() -> Self {
        Self {
            geometry: None,
            state: None,
        }
    }

    /// Decode, stabilize and encode one frame. Frames skipped by the input
    /// are processed as frames without detections.
    pub(crate) fn process(&mut self, batch: &FrameBatch, cfg: &TcaConfig, stats: &mut StreamStats) -> Result<Vec<u8>> {
        let t0 = Instant::now();
        let frame = decode_batch(batch, &mut self.geometry)?;
        stats.decode += t0.elapsed();

        let mut out = Vec::new();
        let Some(geometry) = self.geometry else {
            // nothing known about this video yet: it can only carry empty frames
            if !frame.detections.is_empty() {
                return Err(Error::Invariant("detections decoded without a geometry".into()));
            }
            let t2 = Instant::now();
            for r in encode_outputs(&batch.video_id, batch.frame_index, &[]) {
                write_record(&mut out, &r)?;
            }
            stats.encode += t2.elapsed();
            stats.frames += 1;
            return Ok(out);
        };
        let state = match &mut self.state {
            Some(s) => s,
            None => {
                stats.resolutions.insert(geometry.to_string());
                self.state.insert(TcaVideoState::new(cfg.clone(), geometry)?)
            }
        };
        let first = state.next_frame().unwrap_or(frame.frame_index);
        for index in first..=frame.frame_index {
            let t1 = Instant::now();
            let outputs = if index == frame.frame_index {
                state.step(&frame)?
            } else {
                state.step(&FrameDetections::empty(index))?
            };
            stats.tca += t1.elapsed();
            let t2 = Instant::now();
            for r in encode_outputs(&batch.video_id, index, &outputs) {
                write_record(&mut out, &r)?;
            }
            stats.encode += t2.elapsed();
            stats.frames += 1;
        }
        Ok(out)
    }
}

/// Frames allowed in flight between the reader and the writer.
const WINDOW: u64 = 256;

struct Progress {
    written: Mutex<u64>,
    advanced: Condvar,
    abort: AtomicBool,
}

/// Stream JSONL predictions through per-video aggregation. Videos are
/// pinned to workers; output keeps input frame order whatever `jobs` is.
pub fn run_stream<R: BufRead, W: Write + Send>(input: R, out: &mut W, cfg: &TcaConfig, jobs: usize) -> Result<StreamStats> {
    cfg.validate()?;
    let jobs = jobs.max(1);
    let progress = Progress {
        written: Mutex::new(0),
        advanced: Condvar::new(),
        abort: AtomicBool::new(false),
    };

    std::thread::scope(|scope| {
        let (result_tx, result_rx) = mpsc::channel::<(u64, Result<Vec<u8>>)>();
        let mut senders = Vec::with_capacity(jobs);
        let mut workers = Vec::with_capacity(jobs);
        for _ in 0..jobs {
            let (tx, rx) = mpsc::channel::<(u64, FrameBatch)>();
            senders.push(tx);
            let result_tx = result_tx.clone();
            workers.push(scope.spawn(move || {
                let mut videos: HashMap<String, VideoRun> = HashMap::new();
                let mut stats = StreamStats::default();
                for (seq, batch) in rx {
                    let run = videos.entry(batch.video_id.clone()).or_insert_with(VideoRun::new);
                    stats.videos.insert(batch.video_id.clone());
                    let res = run.process(&batch, cfg, &mut stats);
                    if result_tx.send((seq, res)).is_err() {
                        break;
                    }
                }
                stats
            }));
        }
        drop(result_tx);

        let progress = &progress;
        let writer = scope.spawn(move || -> Result<()> {
            let mut pending: BTreeMap<u64, Result<Vec<u8>>> = BTreeMap::new();
            let mut next = 0u64;
            let mut first_error = None;
            for (seq, res) in result_rx {
                pending.insert(seq, res);
                while let Some(res) = pending.remove(&next) {
                    match res {
                        Ok(bytes) if first_error.is_none() => {
                            if let Err(e) = out.write_all(&bytes) {
                                first_error = Some(Error::Io(e));
                                progress.abort.store(true, Ordering::SeqCst);
                            }
                        }
                        Ok(_) => {}
                        Err(e) => {
                            if first_error.is_none() {
                                first_error = Some(e);
                            }
                            progress.abort.store(true, Ordering::SeqCst);
                        }
                    }
                    next += 1;
                    *progress.written.lock().expect("progress lock") = next;
                    progress.advanced.notify_all();
                }
            }
            progress.advanced.notify_all();
            first_error.map_or(Ok(()), Err)
        });

        let mut owner: HashMap<String, usize> = HashMap::new();
        let mut read_error = None;
        for (seq, batch) in (0u64..).zip(FrameGrouper::new(read_records(input))) {
            let batch = match batch {
                Ok(b) => b,
                Err(e) => {
                    read_error = Some(e);
                    break;
                }
            };
            {
                let mut written = progress.written.lock().expect("progress lock");
                while seq >= *written + WINDOW && !progress.abort.load(Ordering::SeqCst) {
                    written = progress.advanced.wait(written).expect("progress lock");
                }
            }
            if progress.abort.load(Ordering::SeqCst) {
                break;
            }
            let n = owner.len();
            let w = *owner.entry(batch.video_id.clone()).or_insert(n % jobs);
            if senders[w].send((seq, batch)).is_err() {
                break;
            }
        }
        drop(senders);

        let mut stats = StreamStats::default();
        for w in workers {
            let s = w.join().map_err(|_| Error::Invariant("aggregation worker panicked".into()))?;
            stats.absorb(s);
        }
        writer.join().map_err(|_| Error::Invariant("writer panicked".into()))??;
        match read_error {
            Some(e) => Err(e),
            None => Ok(stats),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn rle_line(video: &str, frame: u64, counts: &str) -> String {
        format!(
            r#"{{"video_id":"{video}","frame_index":{frame},"instance":{{"score":0.9,"mask":{{"size":[4,4],"counts":{counts}}}}}}}"#
        )
    }

    fn run(text: &str, jobs: usize) -> Result<(String, StreamStats)> {
        let mut out = Vec::new();
        let stats = run_stream(Cursor::new(text.to_string()), &mut out, &TcaConfig::identity(), jobs)?;
        Ok((String::from_utf8(out).unwrap(), stats))
    }

    #[test]
    fn empty_input() {
        let (out, stats) = run("", 2).unwrap();
        assert!(out.is_empty());
        assert_eq!(stats.frames, 0);
    }

    #[test]
    fn output_order_independent_of_jobs() {
        let mut lines = Vec::new();
        for f in 0..20 {
            for v in ["a", "b", "c"] {
                lines.push(rle_line(v, f, "[5,6,5]"));
            }
        }
        let text = lines.join("\n");
        let (one, _) = run(&text, 1).unwrap();
        let (four, stats) = run(&text, 4).unwrap();
        assert_eq!(one, four);
        assert_eq!(stats.frames, 60);
        assert_eq!(one.lines().count(), 60);
    }

    #[test]
    fn skipped_frames_are_filled() {
        let text = [rle_line("a", 0, "[5,6,5]"), rle_line("a", 3, "[5,6,5]")].join("\n");
        let (out, stats) = run(&text, 1).unwrap();
        assert_eq!(stats.frames, 4);
        let frames: Vec<u64> = out
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["frame_index"].as_u64().unwrap())
            .collect();
        assert_eq!(frames, vec![0, 1, 2, 3]);
    }

    #[test]
    fn bad_record_is_reported_with_line() {
        let text = [rle_line("a", 0, "[5,6,5]"), rle_line("a", 1, "[5,6]")].join("\n");
        let err = run(&text, 2).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
