//! Temporal confidence aggregation for per-frame instance masks, plus the
//! evaluation, annotation-interpolation and synthetic-stream tooling around it.

pub mod annotations;
pub mod detection;
pub mod error;
pub mod maskcore;
pub mod metrics;
pub mod synth;
pub mod tca;
pub mod tracker;

pub use detection::{Detection, FrameDetections};
pub use error::{Error, Result};
pub use maskcore::{BinaryMask, FrameGeometry, Heatmap, Polygon, Rle};
pub use tca::{TcaConfig, TcaVideoState, TrackOutput};
pub use tracker::TrackId;
