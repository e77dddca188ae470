use super::config::TcaConfig;
use crate::error::{Error, Result};
use crate::maskcore::{BinaryMask, FrameGeometry, Heatmap};
use crate::tracker::TrackId;

/// Per-pixel confidence for the current frame inside a detection mask.
#[derive(Debug, Clone, Copy)]
pub enum Confidence<'a> {
    /// One score applied uniformly over the mask.
    Uniform(f64),
    /// Per-pixel scores on the heatmap grid.
    PerPixel(&'a Heatmap),
}

impl Confidence<'_> {
    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self {
            Confidence::Uniform(s) => *s,
            Confidence::PerPixel(map) => map.values()[i],
        }
    }

    fn validate(&self, geometry: FrameGeometry) -> Result<()> {
        match self {
            Confidence::Uniform(s) if !(0.0..=1.0).contains(s) => Err(Error::ScoreOutOfRange(*s)),
            Confidence::Uniform(_) => Ok(()),
            Confidence::PerPixel(map) => geometry.ensure_same(&map.geometry()),
        }
    }
}

/// One tracked instance: its temporal heatmap and the per-pixel counters
/// that gate growth and trigger decay. Lives in downsampled space.
#[derive(Debug, Clone)]
pub struct TrackState {
    pub id: TrackId,
    pub heatmap: Heatmap,
    pub present_counter: Vec<u32>,
    pub absence_counter: Vec<u32>,
    /// Stabilized mask produced on the most recent frame.
    pub last_output: BinaryMask,
    /// Most recent detection absorbed by this track.
    pub last_detection: BinaryMask,
    pub frames_fully_absent: u32,
}

impl TrackState {
    pub fn new(id: TrackId, geometry: FrameGeometry) -> Self {
        Self {
            id,
            heatmap: Heatmap::zeros(geometry),
            present_counter: vec![0; geometry.len()],
            absence_counter: vec![0; geometry.len()],
            last_output: BinaryMask::empty(geometry),
            last_detection: BinaryMask::empty(geometry),
            frames_fully_absent: 0,
        }
    }

    pub fn geometry(&self) -> FrameGeometry {
        self.heatmap.geometry()
    }
}

/// EMA update on every pixel covered by `det_mask`:
/// `h <- alpha * c + (1 - alpha) * h`, applied only once the pixel's present
/// counter has reached `min_present`. Counters update regardless.
pub fn heatmap_update(
    track: &mut TrackState,
    det_mask: &BinaryMask,
    confidence: Confidence<'_>,
    cfg: &TcaConfig,
) -> Result<()> {
    let g = track.geometry();
    g.ensure_same(&det_mask.geometry())?;
    confidence.validate(g)?;
    let alpha = cfg.alpha;
    let values = track.heatmap.values_mut();
    for (i, _) in det_mask.bits().iter().enumerate().filter(|(_, &b)| b) {
        let present = &mut track.present_counter[i];
        *present = present.saturating_add(1);
        track.absence_counter[i] = 0;
        if *present >= cfg.min_present {
            let c = confidence.at(i);
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::ScoreOutOfRange(c));
            }
            values[i] = alpha * c + (1.0 - alpha) * values[i];
        }
    }
    if !det_mask.is_empty() {
        track.last_detection = det_mask.clone();
    }
    Ok(())
}

/// Decay every pixel not covered by `det_mask` (all pixels when `None`):
/// the absence counter grows and the heatmap shrinks by `decay_gamma`.
pub fn heatmap_decay(track: &mut TrackState, det_mask: Option<&BinaryMask>, cfg: &TcaConfig) -> Result<()> {
    if let Some(m) = det_mask {
        track.geometry().ensure_same(&m.geometry())?;
    }
    let covered = |i: usize| det_mask.is_some_and(|m| m.bits()[i]);
    let gamma = cfg.decay_gamma;
    let values = track.heatmap.values_mut();
    let mut any_covered = false;
    for (i, v) in values.iter_mut().enumerate() {
        if covered(i) {
            any_covered = true;
            continue;
        }
        track.absence_counter[i] = track.absence_counter[i].saturating_add(1);
        *v *= gamma;
        if cfg.reset_present_on_absence {
            track.present_counter[i] = 0;
        }
    }
    if any_covered {
        track.frames_fully_absent = 0;
    } else {
        track.frames_fully_absent += 1;
    }
    Ok(())
}
