use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use log::info;
use ripstab_core::annotations::{CocoAnnotation, CocoDataset, CocoImage, Segmentation};
use ripstab_core::maskcore::write_mask_png;
use ripstab_core::synth::{Generator, ScenarioPreset, ScenarioSpec};
use ripstab_core::{Error, Result};
use serde_json::Map;

use super::create;
use crate::records::{encode_detections, write_record};

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Scenario file (TOML or JSON).
    #[arg(long, conflicts_with = "preset")]
    pub spec: Option<PathBuf>,
    /// clean, noise-suppression or gap-bridging.
    #[arg(long)]
    pub preset: Option<String>,
    /// Override the scenario seed.
    #[arg(long, env = "RIPSTAB_SEED")]
    pub seed: Option<u64>,
    /// Override the frame count.
    #[arg(long)]
    pub frames: Option<u64>,
    /// Rescale the scene to this width (requires --height).
    #[arg(long, requires = "height")]
    pub width: Option<usize>,
    #[arg(long, requires = "width")]
    pub height: Option<usize>,
    /// Directory receiving detections.jsonl, annotations.json and spec.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write every detection mask as a PNG under masks/.
    #[arg(long)]
    pub png: bool,
}

pub fn execute(args: &SynthArgs) -> Result<()> {
    let mut spec = match (&args.spec, &args.preset) {
        (Some(path), _) => ScenarioSpec::load(path)?,
        (None, Some(name)) => {
            let preset = ScenarioPreset::from_name(name)
                .ok_or_else(|| Error::Config(format!("unknown scenario preset {name:?}")))?;
            ScenarioSpec::preset(preset, 0)
        }
        (None, None) => return Err(Error::InvalidInput("one of --spec or --preset is required".into())),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(frames) = args.frames {
        spec.num_frames = frames;
    }
    if let (Some(w), Some(h)) = (args.width, args.height) {
        spec = spec.rescaled(w, h);
    }
    let gen = Generator::new(spec.clone())?;
    let geometry = gen.geometry();

    std::fs::create_dir_all(&args.out_dir)?;
    let mut spec_file = create(&args.out_dir.join("spec.json"))?;
    serde_json::to_writer_pretty(&mut spec_file, &spec)?;
    spec_file.write_all(b"\n")?;
    spec_file.flush()?;

    let mut detections = create(&args.out_dir.join("detections.jsonl"))?;
    let mask_dir = args.out_dir.join("masks");
    if args.png {
        std::fs::create_dir_all(&mask_dir)?;
    }
    let mut coco = CocoDataset::default();
    let mut ann_id = 1;
    for f in 0..spec.num_frames {
        let frame = gen.frame(f);
        if args.png {
            for (k, d) in frame.detections.iter().enumerate() {
                let path = mask_dir.join(format!("{}_{f:06}_{k}.png", spec.video_id));
                let mut w = create(&path)?;
                write_mask_png(&d.mask, &mut w)?;
                w.flush()?;
            }
        }
        let dets = frame.detections.into_iter().map(|d| (d.mask, d.score));
        for record in encode_detections(&spec.video_id, f, dets) {
            write_record(&mut detections, &record)?;
        }
        let image_id = f + 1;
        coco.images.push(CocoImage {
            id: image_id,
            video_id: spec.video_id.clone(),
            frame_index: f,
            width: geometry.width(),
            height: geometry.height(),
            provenance: frame.ground_truth.provenance,
            extra: Map::new(),
        });
        for (instance_id, mask) in &frame.ground_truth.instances {
            coco.annotations.push(CocoAnnotation {
                id: ann_id,
                image_id,
                instance_id: *instance_id,
                segmentation: Segmentation::from_mask(mask),
                extra: Map::new(),
            });
            ann_id += 1;
        }
    }
    detections.flush()?;
    let mut ann = create(&args.out_dir.join("annotations.json"))?;
    serde_json::to_writer(&mut ann, &coco)?;
    ann.write_all(b"\n")?;
    ann.flush()?;
    info!("wrote {} frames to {}", spec.num_frames, args.out_dir.display());
    Ok(())
}
