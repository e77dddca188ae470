use crate::error::{Error, Result};
use crate::maskcore::{BinaryMask, Heatmap};

/// One scored instance mask emitted by an upstream detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub mask: BinaryMask,
    pub score: f64,
    /// Optional per-pixel confidence at mask resolution; when present it
    /// replaces the scalar score inside the mask.
    pub score_map: Option<Heatmap>,
}

impl Detection {
    pub fn new(mask: BinaryMask, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::ScoreOutOfRange(score));
        }
        Ok(Self {
            mask,
            score,
            score_map: None,
        })
    }

    pub fn with_score_map(mut self, map: Heatmap) -> Result<Self> {
        self.mask.geometry().ensure_same(&map.geometry())?;
        self.score_map = Some(map);
        Ok(self)
    }
}

/// All detections for one frame of one video.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameDetections {
    pub frame_index: u64,
    pub detections: Vec<Detection>,
}

impl FrameDetections {
    pub fn new(frame_index: u64, detections: Vec<Detection>) -> Self {
        Self {
            frame_index,
            detections,
        }
    }

    pub fn empty(frame_index: u64) -> Self {
        Self::new(frame_index, Vec::new())
    }
}
