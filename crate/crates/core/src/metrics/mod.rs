//! Mask-level evaluation: greedy matching, average precision, F-beta,
//! Cohen's kappa and per-video / pooled report aggregation.

mod ap;
mod fbeta;
mod kappa;
mod matching;
mod report;

pub use ap::{average_precision, ApMode, RankedPrediction};
pub use fbeta::{f_beta, precision, recall};
pub use kappa::{cohen_kappa, frame_kappa, pixel_kappa};
pub use matching::{match_instances, MatchResult, MatchedPair};
pub use report::{evaluate_stream, EvalConfig, EvalReport, GroundTruthFrame, StreamKey, VideoMetrics};
