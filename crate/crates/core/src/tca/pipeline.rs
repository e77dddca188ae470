use super::config::{MatchAgainst, TcaConfig};
use super::hysteresis::hysteresis_values;
use super::state::{heatmap_decay, heatmap_update, Confidence, TrackState};
use crate::detection::FrameDetections;
use crate::error::{Error, Result};
use crate::maskcore::{
    blur_values, downsample_mask, gaussian_kernel, upsample_footprint, upsample_window, BinaryMask,
    FrameGeometry, Heatmap, PixelRect,
};
use crate::tracker::{associate, TrackId};

/// One stabilized instance emitted for a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub track_id: TrackId,
    /// Mask at native resolution.
    pub mask: BinaryMask,
    /// Mean heatmap value over the mask.
    pub score: f64,
}

/// Aggregation state for one video. Frames must be fed strictly in order.
#[derive(Debug, Clone)]
pub struct TcaVideoState {
    config: TcaConfig,
    geometry: FrameGeometry,
    pooled: FrameGeometry,
    kernel: Vec<f64>,
    tracks: Vec<TrackState>,
    next_frame: Option<u64>,
    next_track_id: u64,
    frames_processed: u64,
}

impl TcaVideoState {
    pub fn new(config: TcaConfig, geometry: FrameGeometry) -> Result<Self> {
        config.validate()?;
        let pooled = geometry.downsampled(config.downsample_factor);
        Ok(Self {
            kernel: gaussian_kernel(config.sigma),
            config,
            geometry,
            pooled,
            tracks: Vec::new(),
            next_frame: None,
            next_track_id: 0,
            frames_processed: 0,
        })
    }

    pub fn config(&self) -> &TcaConfig {
        &self.config
    }

    /// Native frame geometry.
    pub fn geometry(&self) -> FrameGeometry {
        self.geometry
    }

    /// Geometry of the downsampled working grid.
    pub fn pooled_geometry(&self) -> FrameGeometry {
        self.pooled
    }

    pub fn tracks(&self) -> &[TrackState] {
        &self.tracks
    }

    /// Index the next call to [`step`](Self::step) must carry, once known.
    pub fn next_frame(&self) -> Option<u64> {
        self.next_frame
    }

    pub fn frames_processed(&self) -> u64 {
        self.frames_processed
    }

    /// Process one frame: downsample, associate, update/decay heatmaps,
    /// smooth, threshold, and emit native-resolution masks for every track
    /// whose stabilized mask is nonempty.
    pub fn step(&mut self, frame: &FrameDetections) -> Result<Vec<TrackOutput>> {
        if let Some(expected) = self.next_frame {
            if frame.frame_index != expected {
                return Err(Error::FrameOrder {
                    expected,
                    got: frame.frame_index,
                });
            }
        }
        for det in &frame.detections {
            self.geometry.ensure_same(&det.mask.geometry())?;
            if !(0.0..=1.0).contains(&det.score) {
                return Err(Error::ScoreOutOfRange(det.score));
            }
        }
        let cfg = &self.config;
        let factor = cfg.downsample_factor;

        let pooled_masks: Vec<BinaryMask> = frame
            .detections
            .iter()
            .map(|d| downsample_mask(&d.mask, factor))
            .collect();
        let pooled_scores: Vec<Option<Heatmap>> = frame
            .detections
            .iter()
            .map(|d| d.score_map.as_ref().map(|m| pool_scores(m, &d.mask, factor)))
            .collect();
        let confidence = |i: usize| match &pooled_scores[i] {
            Some(map) => Confidence::PerPixel(map),
            None => Confidence::Uniform(frame.detections[i].score),
        };

        let track_side: Vec<&BinaryMask> = self
            .tracks
            .iter()
            .map(|t| match cfg.match_against {
                MatchAgainst::Stabilized if !t.last_output.is_empty() => &t.last_output,
                _ => &t.last_detection,
            })
            .collect();
        let det_side: Vec<&BinaryMask> = pooled_masks.iter().collect();
        let assignment = associate(&track_side, &det_side, cfg.iou_gate)?;

        for &(t, d) in &assignment.matches {
            let track = &mut self.tracks[t];
            heatmap_update(track, &pooled_masks[d], confidence(d), cfg)?;
            heatmap_decay(track, Some(&pooled_masks[d]), cfg)?;
        }
        for &t in &assignment.unmatched_tracks {
            heatmap_decay(&mut self.tracks[t], None, cfg)?;
        }
        for &d in &assignment.unmatched_detections {
            let mut track = TrackState::new(TrackId(self.next_track_id), self.pooled);
            self.next_track_id += 1;
            heatmap_update(&mut track, &pooled_masks[d], confidence(d), cfg)?;
            heatmap_decay(&mut track, Some(&pooled_masks[d]), cfg)?;
            self.tracks.push(track);
        }

        let mut outputs = Vec::new();
        for track in &mut self.tracks {
            let blurred = if cfg.sigma > 0.0 {
                let (w, h) = (self.pooled.width(), self.pooled.height());
                blur_values(track.heatmap.values(), w, h, &self.kernel)
            } else {
                track.heatmap.values().to_vec()
            };
            let (w, h) = (self.pooled.width(), self.pooled.height());
            let pooled_out = hysteresis_values(&blurred, w, h, cfg.low, cfg.high, cfg.dilation_radius);
            track.last_output = BinaryMask::from_bits(self.pooled, pooled_out)?;
            let blurred = Heatmap::from_values(self.pooled, blurred)
                .map_err(|e| Error::Invariant(format!("heatmap left [0, 1]: {e}")))?;
            if cfg.smooth_in_place {
                track.heatmap = blurred.clone();
            }
            if track.last_output.is_empty() {
                continue;
            }
            if let Some((mask, score)) = native_output(&blurred, &track.last_output, self.geometry, cfg) {
                outputs.push(TrackOutput {
                    track_id: track.id,
                    mask,
                    score,
                });
            }
        }

        let max_absent = cfg.max_absent_frames;
        self.tracks.retain(|t| t.frames_fully_absent < max_absent);
        self.next_frame = Some(frame.frame_index + 1);
        self.frames_processed += 1;
        Ok(outputs)
    }
}

/// Max-pool a per-pixel score map over the detection's own pixels.
fn pool_scores(map: &Heatmap, mask: &BinaryMask, factor: usize) -> Heatmap {
    let g = map.geometry();
    let pg = g.downsampled(factor);
    let mut pooled = vec![0.0f64; pg.len()];
    for y in 0..g.height() {
        for x in 0..g.width() {
            if mask.get(x, y) {
                let i = pg.index(x / factor, y / factor);
                pooled[i] = pooled[i].max(map.get(x, y));
            }
        }
    }
    Heatmap::from_values(pg, pooled).expect("pooled scores stay in range")
}

/// Re-threshold the bilinearly upsampled heatmap at native scale. Only the
/// window that can contain values `>= low` is materialized.
fn native_output(
    blurred: &Heatmap,
    pooled_mask: &BinaryMask,
    native: FrameGeometry,
    cfg: &TcaConfig,
) -> Option<(BinaryMask, f64)> {
    let pooled = blurred.geometry();
    if pooled == native {
        let mask = pooled_mask.clone();
        let score = mean_over(blurred.values(), mask.bits());
        return Some((mask, score));
    }
    let cells = candidate_rect(blurred, cfg.low)?;
    let window = upsample_footprint(pooled, native, cells);
    let (ww, wh) = (window.width(), window.height());
    if ww == 0 || wh == 0 {
        return None;
    }
    let values = upsample_window(blurred, native, window);
    let radius = cfg.dilation_radius * cfg.downsample_factor;
    let bits = hysteresis_values(&values, ww, wh, cfg.low, cfg.high, radius);
    if !bits.iter().any(|&b| b) {
        return None;
    }
    let score = mean_over(&values, &bits);
    let mut mask = BinaryMask::empty(native);
    let nw = native.width();
    for (row, wy) in (window.y0..window.y1).enumerate() {
        let src = &bits[row * ww..(row + 1) * ww];
        mask.bits_mut()[wy * nw + window.x0..wy * nw + window.x1].copy_from_slice(src);
    }
    Some((mask, score))
}

fn candidate_rect(h: &Heatmap, low: f64) -> Option<PixelRect> {
    let g = h.geometry();
    let bits = h.values().iter().map(|&v| v >= low).collect();
    BinaryMask::from_bits(g, bits).ok()?.bounding_rect()
}

fn mean_over(values: &[f64], bits: &[bool]) -> f64 {
    let (sum, n) = values
        .iter()
        .zip(bits)
        .filter(|(_, &b)| b)
        .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::Detection;

    fn geom(w: usize, h: usize) -> FrameGeometry {
        FrameGeometry::new(w, h).unwrap()
    }

    fn disc(g: FrameGeometry, cx: f64, cy: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(g, |x, y| {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            dx * dx + dy * dy <= r * r
        })
    }

    fn frame(i: u64, dets: Vec<(BinaryMask, f64)>) -> FrameDetections {
        FrameDetections::new(
            i,
            dets.into_iter()
                .map(|(m, s)| Detection::new(m, s).unwrap())
                .collect(),
        )
    }

    #[test]
    fn identity_config_reproduces_input() {
        let g = geom(40, 30);
        let mut state = TcaVideoState::new(TcaConfig::identity(), g).unwrap();
        for i in 0..10 {
            let a = disc(g, 10.0 + i as f64, 12.0, 6.0);
            let b = disc(g, 30.0, 20.0 - i as f64 * 0.5, 4.0);
            let out = state.step(&frame(i, vec![(a.clone(), 0.9), (b.clone(), 0.51)])).unwrap();
            let mut masks: Vec<_> = out.into_iter().map(|o| o.mask).collect();
            masks.sort_by_key(|m| m.bits().to_vec());
            let mut expected = vec![a, b];
            expected.sort_by_key(|m| m.bits().to_vec());
            assert_eq!(masks, expected, "frame {i}");
        }
    }

    #[test]
    fn out_of_order_frame_is_error() {
        let g = geom(8, 8);
        let mut state = TcaVideoState::new(TcaConfig::default(), g).unwrap();
        state.step(&FrameDetections::empty(5)).unwrap();
        let err = state.step(&FrameDetections::empty(7)).unwrap_err();
        assert!(matches!(err, Error::FrameOrder { expected: 6, got: 7 }));
    }

    #[test]
    fn geometry_mismatch_is_error() {
        let mut state = TcaVideoState::new(TcaConfig::default(), geom(8, 8)).unwrap();
        let bad = frame(0, vec![(BinaryMask::full(geom(8, 9)), 0.9)]);
        assert!(matches!(state.step(&bad), Err(Error::GeometryMismatch { .. })));
    }

    #[test]
    fn single_gap_frame_is_bridged() {
        let g = geom(128, 128);
        let blob = disc(g, 64.0, 64.0, 30.0);
        let mut state = TcaVideoState::new(TcaConfig::default(), g).unwrap();
        for i in 0..50 {
            state.step(&frame(i, vec![(blob.clone(), 0.9)])).unwrap();
        }
        let out = state.step(&FrameDetections::empty(50)).unwrap();
        assert_eq!(out.len(), 1);
        assert!(!out[0].mask.is_empty());
    }

    #[test]
    fn one_frame_spurious_blob_never_emits() {
        let g = geom(64, 64);
        let mut state = TcaVideoState::new(TcaConfig::default(), g).unwrap();
        let blob = disc(g, 20.0, 20.0, 8.0);
        for i in 0..20 {
            let dets = if i == 3 { vec![(blob.clone(), 1.0)] } else { vec![] };
            let out = state.step(&frame(i, dets)).unwrap();
            assert!(out.is_empty(), "frame {i}");
        }
    }

    #[test]
    fn empty_tracks_expire() {
        let g = geom(32, 32);
        let cfg = TcaConfig { max_absent_frames: 3, ..Default::default() };
        let mut state = TcaVideoState::new(cfg, g).unwrap();
        state.step(&frame(0, vec![(disc(g, 16.0, 16.0, 5.0), 0.9)])).unwrap();
        assert_eq!(state.tracks().len(), 1);
        for i in 1..=3 {
            state.step(&FrameDetections::empty(i)).unwrap();
        }
        assert!(state.tracks().is_empty());
    }

    #[test]
    fn track_ids_are_stable_for_a_moving_blob() {
        let g = geom(96, 64);
        let mut state = TcaVideoState::new(TcaConfig::default(), g).unwrap();
        let mut ids = std::collections::BTreeSet::new();
        for i in 0..30 {
            let blob = disc(g, 20.0 + 2.0 * i as f64, 32.0, 12.0);
            for o in state.step(&frame(i, vec![(blob, 0.9)])).unwrap() {
                ids.insert(o.track_id);
            }
        }
        assert_eq!(ids.len(), 1);
        assert_eq!(state.tracks().len(), 1);
    }

    #[test]
    fn deterministic_outputs() {
        let g = geom(64, 48);
        let run = || {
            let mut state = TcaVideoState::new(TcaConfig::default(), g).unwrap();
            (0..15)
                .map(|i| {
                    let a = disc(g, 20.0 + i as f64, 20.0, 9.0);
                    let b = disc(g, 45.0, 30.0, 6.0 + (i % 3) as f64);
                    state.step(&frame(i, vec![(a, 0.8), (b, 0.7)])).unwrap()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
