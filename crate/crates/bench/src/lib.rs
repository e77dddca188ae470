//! Shared fixtures for the benchmarks.

use ripstab_core::synth::{Generator, ScenarioPreset, ScenarioSpec};
use ripstab_core::{BinaryMask, FrameDetections, FrameGeometry};

/// Detections of the noise-suppression scene rescaled to `width x height`.
pub fn synthetic_frames(width: usize, height: usize, frames: u64) -> (FrameGeometry, Vec<FrameDetections>) {
    let mut spec = ScenarioSpec::preset(ScenarioPreset::NoiseSuppression, 1).rescaled(width, height);
    spec.num_frames = frames;
    let gen = Generator::new(spec).expect("preset is valid");
    let dets = (0..frames)
        .map(|f| gen.frame(f).to_frame_detections().expect("generated scores are valid"))
        .collect();
    (gen.geometry(), dets)
}

/// A filled ellipse covering roughly a third of the frame.
pub fn ellipse(geometry: FrameGeometry) -> BinaryMask {
    let (w, h) = (geometry.width() as f64, geometry.height() as f64);
    BinaryMask::from_fn(geometry, |x, y| {
        let dx = (x as f64 + 0.5 - w / 2.0) / (w / 3.0);
        let dy = (y as f64 + 0.5 - h / 2.0) / (h / 3.0);
        dx * dx + dy * dy <= 1.0
    })
}
