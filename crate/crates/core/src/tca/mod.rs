//! Temporal confidence aggregation: per-track heatmaps that grow under
//! repeated detections, decay under absence, and are re-thresholded with
//! hysteresis into stabilized masks.

mod config;
mod hysteresis;
mod pipeline;
mod state;

pub use config::{MatchAgainst, Preset, TcaConfig};
pub use hysteresis::{hysteresis, threshold_hysteresis};
pub use pipeline::{TcaVideoState, TrackOutput};
pub use state::{heatmap_decay, heatmap_update, Confidence, TrackState};
