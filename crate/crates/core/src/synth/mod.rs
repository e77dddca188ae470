//! Deterministic synthetic detection streams: amorphous moving blobs with
//! controllable drops, spurious blobs, boundary jitter, score noise and
//! camera pan, plus the clean ground truth they were derived from.

mod generate;
mod rng;
mod spec;

pub use generate::{generate, Generator, SynthDetection, SynthFrame, SynthSource, SynthStream};
pub use spec::{BlobSpec, CameraSpec, NoiseSpec, ScenarioPreset, ScenarioSpec, Waypoint};
