use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ripstab_cli::commands::bench::bench_file;
use ripstab_cli::manifest::RunManifest;
use ripstab_cli::records::{decode_batch, read_records, FrameGrouper};
use ripstab_core::{BinaryMask, TcaConfig};
use serde_json::Value;
use tempfile::TempDir;

fn ripstab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ripstab"));
    for (key, _) in std::env::vars() {
        if key.starts_with("RIPSTAB_") {
            cmd.env_remove(key);
        }
    }
    cmd.args(args).envs(env.iter().copied()).output().expect("spawn ripstab")
}

fn ok(args: &[&str]) -> Output {
    let out = ripstab(args, &[]);
    assert!(
        out.status.success(),
        "ripstab {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, preset: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(preset);
    let mut args = vec!["synth", "--preset", preset, "--out-dir", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

type Stream = BTreeMap<(String, u64), Vec<(BinaryMask, f64)>>;

fn decode_stream(path: &Path) -> Stream {
    let file = BufReader::new(fs::File::open(path).unwrap());
    let mut geometry = None;
    let mut out = BTreeMap::new();
    for batch in FrameGrouper::new(read_records(file)) {
        let batch = batch.unwrap();
        let frame = decode_batch(&batch, &mut geometry).unwrap();
        let dets = frame.detections.into_iter().map(|d| (d.mask, d.score)).collect();
        out.insert((batch.video_id, batch.frame_index), dets);
    }
    out
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn aggregate(report: &Value, field: &str) -> f64 {
    report["aggregate"][field].as_f64().unwrap_or_else(|| panic!("no aggregate.{field}"))
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(ripstab(&["tca", "--bogus"], &[]).status.code(), Some(1));
    assert_eq!(ripstab(&[], &[]).status.code(), Some(1));
    assert_eq!(ripstab(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn input_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = dir.path().join("out.jsonl");
    assert_eq!(ripstab(&["tca", "-i", s(&missing), "-o", s(&out)], &[]).status.code(), Some(1));

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"video_id\":\"v\",\"frame_index\":0,\"instance\":null}\nnot json\n").unwrap();
    let res = ripstab(&["tca", "-i", s(&bad), "-o", s(&out)], &[]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));

    let order = dir.path().join("order.jsonl");
    fs::write(
        &order,
        "{\"video_id\":\"v\",\"frame_index\":3,\"instance\":null}\n{\"video_id\":\"v\",\"frame_index\":1,\"instance\":null}\n",
    )
    .unwrap();
    assert_eq!(ripstab(&["tca", "-i", s(&order), "-o", s(&out)], &[]).status.code(), Some(1));

    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "alpha = 3.0\n").unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let res = ripstab(&["tca", "-i", s(&empty), "-o", s(&out), "--config", s(&cfg)], &[]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn environment_overrides_flags() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = dir.path().join("out.jsonl");
    let args = ["tca", "-i", s(&empty), "-o", s(&out)];
    assert_eq!(ripstab(&args, &[("RIPSTAB_PRESET", "no-such-preset")]).status.code(), Some(1));
    assert_eq!(ripstab(&args, &[("RIPSTAB_PRESET", "identity")]).status.code(), Some(0));
    assert_eq!(ripstab(&args, &[("RIPSTAB_JOBS", "many")]).status.code(), Some(1));
    assert_eq!(ripstab(&args, &[("RIPSTAB_LOG_LEVEL", "loud")]).status.code(), Some(1));
    let res = ripstab(&args, &[("RIPSTAB_LOG_LEVEL", "info")]);
    assert_eq!(res.status.code(), Some(0));

    let m: Value = report(&dir.path().join("out.jsonl.manifest.json"));
    assert_eq!(m["config"]["alpha"], 0.4);
    ok(&["tca", "-i", s(&empty), "-o", s(&out), "--preset", "identity"]);
    let m: Value = report(&dir.path().join("out.jsonl.manifest.json"));
    assert_eq!(m["config"]["alpha"], 1.0);

    let clean = synth(dir.path(), "clean", &["--frames", "4"]);
    let pred = clean.join("detections.jsonl");
    let gt = clean.join("annotations.json");
    let strict = ripstab(
        &["eval", "--pred", s(&pred), "--gt", s(&gt)],
        &[("RIPSTAB_IOU_THRESH", "1.5")],
    );
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn empty_input_gives_empty_output_and_zero_frame_manifest() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = dir.path().join("sub/out.jsonl");
    let manifest = dir.path().join("run.json");
    ok(&["tca", "-i", s(&empty), "-o", s(&out), "--manifest", s(&manifest)]);
    assert_eq!(fs::read(&out).unwrap(), b"");
    let m = RunManifest::load(&manifest).unwrap();
    assert_eq!(m.frames, 0);
    assert_eq!(m.videos, 0);
    assert_eq!(m.inputs.len(), 1);
    assert_eq!(
        m.inputs[0].sha256,
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
}

#[test]
fn identity_preset_reproduces_clean_stream() {
    let dir = TempDir::new().unwrap();
    let clean = synth(dir.path(), "clean", &["--frames", "12"]);
    let input = clean.join("detections.jsonl");
    let out = dir.path().join("out.jsonl");
    ok(&["tca", "-i", s(&input), "-o", s(&out), "--preset", "identity"]);
    let (a, b) = (decode_stream(&input), decode_stream(&out));
    assert_eq!(a.len(), 12);
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (key, dets) in &a {
        let got: Vec<&BinaryMask> = b[key].iter().map(|(m, _)| m).collect();
        let want: Vec<&BinaryMask> = dets.iter().map(|(m, _)| m).collect();
        assert_eq!(got, want, "frame {key:?}");
    }
}

#[test]
fn perfect_predictions_score_one() {
    let dir = TempDir::new().unwrap();
    let clean = synth(dir.path(), "clean", &["--frames", "10"]);
    let gt = clean.join("annotations.json");
    let rep = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    for pred in [clean.join("detections.jsonl"), gt.clone()] {
        ok(&["eval", "--pred", s(&pred), "--gt", s(&gt), "--out", s(&rep), "--csv", s(&csv)]);
        let r = report(&rep);
        for field in ["precision", "recall", "ap50", "f1", "f2"] {
            assert_eq!(aggregate(&r, field), 1.0, "{field}");
        }
    }
    let csv = fs::read_to_string(&csv).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("video"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn swapping_pred_and_gt_exchanges_precision_and_recall() {
    let dir = TempDir::new().unwrap();
    let noisy = synth(dir.path(), "noise-suppression", &["--frames", "60", "--seed", "5"]);
    let det = noisy.join("detections.jsonl");
    let gt = noisy.join("annotations.json");
    let (fwd, bwd) = (dir.path().join("fwd.json"), dir.path().join("bwd.json"));
    let common = ["--score-thresh", "0"];
    let mut a = vec!["eval", "--pred", s(&det), "--gt", s(&gt), "--out", s(&fwd)];
    a.extend(common);
    ok(&a);
    let mut b = vec!["eval", "--pred", s(&gt), "--gt", s(&det), "--out", s(&bwd)];
    b.extend(common);
    ok(&b);
    let (f, r) = (report(&fwd), report(&bwd));
    assert!(aggregate(&f, "precision") < 0.95, "data must be asymmetric");
    assert_eq!(aggregate(&f, "precision"), aggregate(&r, "recall"));
    assert_eq!(aggregate(&f, "recall"), aggregate(&r, "precision"));
}

#[test]
fn unannotated_prediction_frames_are_a_hard_error() {
    let dir = TempDir::new().unwrap();
    let long = synth(dir.path(), "clean", &["--frames", "10"]);
    let short_dir = dir.path().join("short");
    ok(&["synth", "--preset", "clean", "--frames", "6", "--out-dir", s(&short_dir)]);
    let res = ripstab(
        &[
            "eval",
            "--pred",
            s(&long.join("detections.jsonl")),
            "--gt",
            s(&short_dir.join("annotations.json")),
        ],
        &[],
    );
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains('9'));
}

#[test]
fn fbeta_only_mode() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("f.json");
    let res = ok(&["eval", "--fbeta-only", "--pr", "0.5,0.5", "--pr", "1,0.25", "--out", s(&out)]);
    assert!(String::from_utf8_lossy(&res.stdout).contains("f2"));
    let rows = report(&out);
    assert_eq!(rows[0]["f1"], 0.5);
    assert_eq!(rows[0]["f2"], 0.5);
    // F1 = 2*0.25/1.25, F2 = 5*0.25/(4+0.25)
    assert!((rows[1]["f1"].as_f64().unwrap() - 0.4).abs() < 1e-15);
    assert!((rows[1]["f2"].as_f64().unwrap() - 1.25 / 4.25).abs() < 1e-15);
    assert_eq!(ripstab(&["eval", "--fbeta-only"], &[]).status.code(), Some(1));
    assert_eq!(ripstab(&["eval", "--fbeta-only", "--pr", "2,0.5"], &[]).status.code(), Some(1));
}

#[test]
fn interpolate_fills_between_keyframes() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"seed": 1, "video_id": "k", "width": 64, "height": 48, "num_frames": 9, "manual_every": 4,
            "blobs": [{"base_radius": 10, "trajectory": [{"frame": 0, "x": 20, "y": 24}, {"frame": 8, "x": 44, "y": 24}]}]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("gen");
    ok(&["synth", "--spec", s(&spec), "--out-dir", s(&out_dir)]);

    // Keep only the keyframes, then densify them again.
    let full = report(&out_dir.join("annotations.json"));
    let keep: Vec<Value> = full["images"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|im| im["provenance"] == "manual")
        .cloned()
        .collect();
    let ids: Vec<&Value> = keep.iter().map(|im| &im["id"]).collect();
    let anns: Vec<Value> = full["annotations"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|a| ids.contains(&&a["image_id"]))
        .cloned()
        .collect();
    assert_eq!(keep.len(), 3);
    let sparse = dir.path().join("sparse.json");
    fs::write(&sparse, serde_json::json!({"images": keep, "annotations": anns}).to_string()).unwrap();

    let dense = dir.path().join("dense.json");
    ok(&["interpolate", "--in", s(&sparse), "--out", s(&dense)]);
    let d = report(&dense);
    assert_eq!(d["images"].as_array().unwrap().len(), 9);
    let interpolated = d["images"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|im| im["provenance"] == "interpolated")
        .count();
    assert_eq!(interpolated, 6);

    // Densifying an already dense file changes nothing.
    let again = dir.path().join("again.json");
    ok(&["interpolate", "--in", s(&dense), "--out", s(&again)]);
    assert_eq!(fs::read(&dense).unwrap(), fs::read(&again).unwrap());

    let strided = dir.path().join("strided.json");
    ok(&["interpolate", "--in", s(&sparse), "--out", s(&strided), "--fps-policy", "stride:2"]);
    assert_eq!(report(&strided)["images"].as_array().unwrap().len(), 5);
    let res = ripstab(&["interpolate", "--in", s(&sparse), "--out", s(&strided), "--fps-policy", "stride:0"], &[]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn synth_is_seed_deterministic_and_writes_pngs() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        ok(&["synth", "--preset", "noise-suppression", "--frames", "20", "--seed", "3", "--out-dir", s(d), "--png"]);
    }
    for f in ["spec.json", "detections.jsonl", "annotations.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let pngs = fs::read_dir(a.join("masks")).unwrap().count();
    assert!(pngs >= 20);

    let c = dir.path().join("c");
    ok(&["synth", "--preset", "noise-suppression", "--frames", "20", "--seed", "4", "--out-dir", s(&c)]);
    assert_ne!(fs::read(a.join("detections.jsonl")).unwrap(), fs::read(c.join("detections.jsonl")).unwrap());
    assert_eq!(fs::read(a.join("annotations.json")).unwrap(), fs::read(c.join("annotations.json")).unwrap());
}

#[test]
fn tca_and_eval_are_deterministic_across_jobs() {
    let dir = TempDir::new().unwrap();
    let noisy = synth(dir.path(), "noise-suppression", &["--frames", "40"]);
    let clean = synth(dir.path(), "clean", &["--frames", "40"]);
    // Two videos interleaved frame by frame.
    let mut merged = String::new();
    let n = fs::read_to_string(noisy.join("detections.jsonl")).unwrap();
    let c = fs::read_to_string(clean.join("detections.jsonl")).unwrap();
    let by_frame = |text: &str| {
        let mut m: BTreeMap<u64, Vec<String>> = BTreeMap::new();
        for line in text.lines() {
            let v: Value = serde_json::from_str(line).unwrap();
            m.entry(v["frame_index"].as_u64().unwrap()).or_default().push(line.to_string());
        }
        m
    };
    let (nf, cf) = (by_frame(&n), by_frame(&c));
    for f in 0..40 {
        for line in nf[&f].iter().chain(&cf[&f]) {
            merged.push_str(line);
            merged.push('\n');
        }
    }
    let input = dir.path().join("merged.jsonl");
    fs::write(&input, merged).unwrap();

    let mut outputs = Vec::new();
    for jobs in ["1", "3", "1"] {
        let out = dir.path().join(format!("out{}.jsonl", outputs.len()));
        ok(&["--jobs", jobs, "tca", "-i", s(&input), "-o", s(&out)]);
        let manifest = RunManifest::load(&dir.path().join(format!("out{}.jsonl.manifest.json", outputs.len()))).unwrap();
        assert_eq!(manifest.frames, 80);
        assert_eq!(manifest.videos, 2);
        outputs.push((fs::read(&out).unwrap(), manifest));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    assert_eq!(outputs[0].0, outputs[2].0);
    let strip = |m: &RunManifest| serde_json::to_string(&m.without_timings()).unwrap();
    assert_eq!(strip(&outputs[0].1), strip(&outputs[2].1));

    let noisy_out = dir.path().join("noisy_out.jsonl");
    ok(&["tca", "-i", s(&noisy.join("detections.jsonl")), "-o", s(&noisy_out)]);
    let mut reports = Vec::new();
    for k in 0..2 {
        let rep = dir.path().join(format!("rep{k}.json"));
        let csv = dir.path().join(format!("rep{k}.csv"));
        let res = ok(&["eval", "--pred", s(&noisy_out), "--gt", s(&noisy.join("annotations.json")), "--out", s(&rep), "--csv", s(&csv)]);
        reports.push((fs::read(&rep).unwrap(), fs::read(&csv).unwrap(), res.stdout));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn eval_copies_fps_from_run_manifest() {
    let dir = TempDir::new().unwrap();
    let clean = synth(dir.path(), "clean", &["--frames", "8"]);
    let out = dir.path().join("out.jsonl");
    ok(&["tca", "-i", s(&clean.join("detections.jsonl")), "-o", s(&out)]);
    let rep = dir.path().join("r.json");
    let gt = clean.join("annotations.json");
    ok(&["eval", "--pred", s(&out), "--gt", s(&gt), "--out", s(&rep)]);
    assert!(report(&rep).get("fps").is_none());
    let manifest = dir.path().join("out.jsonl.manifest.json");
    ok(&["eval", "--pred", s(&out), "--gt", s(&gt), "--out", s(&rep), "--run-manifest", s(&manifest)]);
    let fps = report(&rep)["fps"].as_f64().unwrap();
    assert_eq!(Some(fps), RunManifest::load(&manifest).unwrap().fps);
}

#[test]
fn bench_reports_positive_fps_with_hardware() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"seed": 2, "video_id": "b", "width": 256, "height": 256, "num_frames": 100,
            "blobs": [{"base_radius": 30, "trajectory": [{"frame": 0, "x": 100, "y": 128}, {"frame": 99, "x": 156, "y": 128}]}],
            "noise": {"spurious_rate": 0.3}}"#,
    )
    .unwrap();
    let gen = dir.path().join("gen");
    ok(&["synth", "--spec", s(&spec), "--out-dir", s(&gen)]);
    let manifest = dir.path().join("bench.json");
    let res = ok(&["bench", "-i", s(&gen.join("detections.jsonl")), "--manifest", s(&manifest)]);
    assert!(String::from_utf8_lossy(&res.stdout).contains("fps"));
    let m = RunManifest::load(&manifest).unwrap();
    assert_eq!(m.frames, 100);
    assert!(m.fps.unwrap() > 0.0);
    assert!(m.hardware.logical_cpus >= 1);
    assert!(!m.hardware.arch.is_empty());
    for k in 0..3 {
        assert!(m.timings.contains_key(&format!("tca_pass{k}")));
    }
    assert_eq!(m.resolutions, vec!["256x256".to_string()]);
}

#[test]
fn coarser_downsampling_is_faster() {
    let dir = TempDir::new().unwrap();
    let noisy = synth(dir.path(), "noise-suppression", &["--frames", "60", "--width", "768", "--height", "768"]);
    let input = noisy.join("detections.jsonl");
    let per_frame = |factor: usize| {
        let cfg = TcaConfig {
            downsample_factor: factor,
            ..TcaConfig::default()
        };
        let r = bench_file(&input, &cfg, 3).unwrap();
        r.median.tca.as_secs_f64() / r.median.frames as f64
    };
    let (two, four) = (per_frame(2), per_frame(4));
    assert!(four < two, "factor 4: {four:e}s/frame, factor 2: {two:e}s/frame");
}
