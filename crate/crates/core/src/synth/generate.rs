use std::f64::consts::TAU;

use log::{debug, warn};
use rand::Rng;

use super::rng::{stream, Purpose};
use super::spec::{BlobSpec, ScenarioSpec};
use crate::annotations::{DenseAnnotation, Provenance};
use crate::detection::{Detection, FrameDetections};
use crate::error::Result;
use crate::maskcore::{BinaryMask, FrameGeometry};

/// Where a synthetic detection came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthSource {
    /// Noisy copy of ground-truth blob `index`.
    Blob(usize),
    /// False positive born on `birth_frame` as that frame's `index`-th birth.
    Spurious { birth_frame: u64, index: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDetection {
    pub mask: BinaryMask,
    pub score: f64,
    pub source: SynthSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    pub frame_index: u64,
    pub detections: Vec<SynthDetection>,
    /// Clean blobs keyed by blob index.
    pub ground_truth: DenseAnnotation,
}

impl SynthFrame {
    pub fn to_frame_detections(&self) -> Result<FrameDetections> {
        let dets = self
            .detections
            .iter()
            .map(|d| Detection::new(d.mask.clone(), d.score))
            .collect::<Result<Vec<_>>>()?;
        Ok(FrameDetections::new(self.frame_index, dets))
    }

    /// Union of the masks of spurious detections.
    pub fn spurious_mask(&self) -> BinaryMask {
        let mut out = BinaryMask::empty(self.ground_truth_geometry());
        for d in self.detections.iter().filter(|d| matches!(d.source, SynthSource::Spurious { .. })) {
            for (o, &b) in out.bits_mut().iter_mut().zip(d.mask.bits()) {
                *o |= b;
            }
        }
        out
    }

    fn ground_truth_geometry(&self) -> FrameGeometry {
        self.detections
            .first()
            .map(|d| d.mask.geometry())
            .or_else(|| self.ground_truth.instances.first().map(|(_, m)| m.geometry()))
            .unwrap_or_else(|| FrameGeometry::new(1, 1).expect("1x1"))
    }
}

#[derive(Debug, Clone)]
pub struct SynthStream {
    pub video_id: String,
    pub geometry: FrameGeometry,
    pub frames: Vec<SynthFrame>,
}

/// Radial modes of one blob: `(order, weight, phase)`.
#[derive(Debug, Clone)]
struct Shape {
    modes: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
struct Spurious {
    birth_frame: u64,
    index: u64,
    lifetime: u64,
    cx: f64,
    cy: f64,
    radius: f64,
    score: f64,
    phase: f64,
}

/// Random-access frame generator: every frame is a pure function of the
/// spec and its index.
#[derive(Debug, Clone)]
pub struct Generator {
    spec: ScenarioSpec,
    geometry: FrameGeometry,
    shapes: Vec<Shape>,
}

pub fn generate(spec: &ScenarioSpec) -> Result<SynthStream> {
    let gen = Generator::new(spec.clone())?;
    Ok(SynthStream {
        video_id: spec.video_id.clone(),
        geometry: gen.geometry(),
        frames: (0..spec.num_frames).map(|f| gen.frame(f)).collect(),
    })
}

impl Generator {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        let geometry = spec.geometry()?;
        let shapes = spec
            .blobs
            .iter()
            .enumerate()
            .map(|(i, b)| {
                // shape modes are part of the clean scene, not of the noise,
                // so they do not depend on the seed
                let mut rng = stream(0, Purpose::BlobShape, 0, i as u64);
                let raw: Vec<(f64, f64)> = (0..b.harmonics)
                    .map(|_| (rng.gen_range(0.3..1.0), rng.gen_range(0.0..TAU)))
                    .collect();
                let total: f64 = raw.iter().map(|(w, _)| w).sum();
                let modes = raw
                    .iter()
                    .enumerate()
                    .map(|(k, &(w, phase))| ((k + 2) as f64, w / total, phase))
                    .collect();
                Shape { modes }
            })
            .collect();
        Ok(Self {
            spec,
            geometry,
            shapes,
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn geometry(&self) -> FrameGeometry {
        self.geometry
    }

    pub fn num_frames(&self) -> u64 {
        self.spec.num_frames
    }

    fn active(&self, blob: &BlobSpec, f: u64) -> bool {
        f < self.spec.num_frames && f >= blob.start_frame && blob.end_frame.is_none_or(|e| f < e)
    }

    fn center(&self, blob: &BlobSpec, f: u64) -> (f64, f64) {
        let t = &blob.trajectory;
        let (x, y) = match t.iter().position(|w| w.frame > f) {
            None => (t[t.len() - 1].x, t[t.len() - 1].y),
            Some(0) => (t[0].x, t[0].y),
            Some(i) => {
                let (a, b) = (t[i - 1], t[i]);
                let s = (f - a.frame) as f64 / (b.frame - a.frame) as f64;
                (a.x + s * (b.x - a.x), a.y + s * (b.y - a.y))
            }
        };
        let (px, py) = self.spec.camera.pan;
        (x + px * f as f64, y + py * f as f64)
    }

    fn max_extent(&self, blob: &BlobSpec) -> f64 {
        blob.base_radius * (1.0 + blob.deform_amplitude) + self.spec.noise.jitter_px
    }

    /// Spurious blobs born on frame `f` (whether or not still alive later).
    fn births(&self, f: u64) -> Vec<Spurious> {
        let n = &self.spec.noise;
        let mut rng = stream(self.spec.seed, Purpose::SpuriousBirth, f, 0);
        let whole = n.spurious_rate.floor();
        let count = whole as u64 + u64::from(rng.gen::<f64>() < n.spurious_rate - whole);
        let (w, h) = (self.geometry.width() as f64, self.geometry.height() as f64);
        let mut out = Vec::new();
        for index in 0..count {
            let mut rng = stream(self.spec.seed, Purpose::SpuriousShape, f, index);
            let lifetime = rng.gen_range(n.spurious_lifetime.0..=n.spurious_lifetime.1);
            let radius = rng.gen_range(n.spurious_radius.0..=n.spurious_radius.1);
            let score = rng.gen_range(n.spurious_score.0..=n.spurious_score.1);
            let phase = rng.gen_range(0.0..TAU);
            let placed = (0..32).find_map(|_| {
                let (cx, cy) = (rng.gen_range(0.0..w), rng.gen_range(0.0..h));
                self.clear_of_blobs(cx, cy, radius, f, lifetime).then_some((cx, cy))
            });
            match placed {
                Some((cx, cy)) => out.push(Spurious {
                    birth_frame: f,
                    index,
                    lifetime,
                    cx,
                    cy,
                    radius,
                    score,
                    phase,
                }),
                None => debug!("frame {f}: no room for spurious blob {index}"),
            }
        }
        out
    }

    fn clear_of_blobs(&self, cx: f64, cy: f64, radius: f64, birth: u64, lifetime: u64) -> bool {
        let margin = self.spec.noise.spurious_margin;
        (birth..birth + lifetime).all(|g| {
            self.spec.blobs.iter().all(|b| {
                if !self.active(b, g) {
                    return true;
                }
                let (bx, by) = self.center(b, g);
                let reach = self.max_extent(b) + radius * 1.2 + margin;
                (cx - bx).hypot(cy - by) > reach
            })
        })
    }

    /// Number of spurious blobs born on frame `f`.
    pub fn spurious_births_at(&self, f: u64) -> usize {
        self.births(f).len()
    }

    pub fn frame(&self, f: u64) -> SynthFrame {
        let spec = &self.spec;
        let noise = &spec.noise;
        let mut detections = Vec::new();
        let mut truth = Vec::new();
        for (i, blob) in spec.blobs.iter().enumerate() {
            if !self.active(blob, f) {
                continue;
            }
            let (cx, cy) = self.center(blob, f);
            let shape = &self.shapes[i];
            let drift = blob.phase_drift * f as f64;
            let radius = |theta: f64| {
                let wobble: f64 = shape
                    .modes
                    .iter()
                    .map(|&(k, w, p)| w * (k * theta + p + drift).sin())
                    .sum();
                blob.base_radius * (1.0 + blob.deform_amplitude * wobble)
            };
            let reach = self.max_extent(blob);
            let gt = star_mask(self.geometry, cx, cy, reach, radius);
            if gt.is_empty() {
                warn!("frame {f}: blob {i} lies entirely outside the frame");
            }

            let in_burst = noise.drop_bursts.iter().any(|&(s, len)| (s..s + len).contains(&f));
            let dropped = in_burst
                || stream(spec.seed, Purpose::Drop, f, i as u64).gen::<f64>() < noise.drop_prob;
            if !dropped {
                let mask = if noise.jitter_px > 0.0 {
                    let mut rng = stream(spec.seed, Purpose::Jitter, f, i as u64);
                    let modes: Vec<(f64, f64, f64)> = (0..3)
                        .map(|_| {
                            (
                                rng.gen_range(1..=4) as f64,
                                rng.gen_range(-1.0..=1.0) / 3.0,
                                rng.gen_range(0.0..TAU),
                            )
                        })
                        .collect();
                    star_mask(self.geometry, cx, cy, reach, |theta| {
                        let j: f64 = modes.iter().map(|&(k, w, p)| w * (k * theta + p).sin()).sum();
                        radius(theta) + noise.jitter_px * j
                    })
                } else {
                    gt.clone()
                };
                let score = if noise.score_noise > 0.0 {
                    let u: f64 = stream(spec.seed, Purpose::Score, f, i as u64).gen_range(-1.0..=1.0);
                    (blob.score + noise.score_noise * u).clamp(0.0, 1.0)
                } else {
                    blob.score
                };
                detections.push(SynthDetection {
                    mask,
                    score,
                    source: SynthSource::Blob(i),
                });
            }
            truth.push((i as u64, gt));
        }

        if noise.spurious_rate > 0.0 {
            let oldest = f.saturating_sub(noise.spurious_lifetime.1 - 1);
            for birth in oldest..=f {
                for s in self.births(birth) {
                    if birth + s.lifetime <= f {
                        continue;
                    }
                    let mask = star_mask(self.geometry, s.cx, s.cy, s.radius * 1.2, |theta| {
                        s.radius * (1.0 + 0.2 * (2.0 * theta + s.phase).sin())
                    });
                    detections.push(SynthDetection {
                        mask,
                        score: s.score,
                        source: SynthSource::Spurious {
                            birth_frame: s.birth_frame,
                            index: s.index,
                        },
                    });
                }
            }
        }

        let provenance = if f.is_multiple_of(spec.manual_every) {
            Provenance::Manual
        } else {
            Provenance::Interpolated
        };
        SynthFrame {
            frame_index: f,
            detections,
            ground_truth: DenseAnnotation {
                frame_index: f,
                instances: truth,
                provenance,
            },
        }
    }
}

/// Star-shaped region `{ |p - c| <= r(angle) }` sampled at pixel centers,
/// evaluated only inside the `reach` box around the center.
fn star_mask(
    geometry: FrameGeometry,
    cx: f64,
    cy: f64,
    reach: f64,
    radius: impl Fn(f64) -> f64,
) -> BinaryMask {
    let mut mask = BinaryMask::empty(geometry);
    let (w, h) = (geometry.width() as f64, geometry.height() as f64);
    let x0 = (cx - reach - 1.0).floor().clamp(0.0, w) as usize;
    let x1 = (cx + reach + 1.0).ceil().clamp(0.0, w) as usize;
    let y0 = (cy - reach - 1.0).floor().clamp(0.0, h) as usize;
    let y1 = (cy + reach + 1.0).ceil().clamp(0.0, h) as usize;
    let width = geometry.width();
    let bits = mask.bits_mut();
    for y in y0..y1 {
        let dy = y as f64 + 0.5 - cy;
        for x in x0..x1 {
            let dx = x as f64 + 0.5 - cx;
            let d = dx.hypot(dy);
            if d <= reach && d <= radius(dy.atan2(dx)) {
                bits[y * width + x] = true;
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskcore::iou;
    use crate::synth::spec::{ScenarioPreset, Waypoint};

    #[test]
    fn clean_scenario_detections_equal_truth() {
        let stream = generate(&ScenarioSpec::preset(ScenarioPreset::Clean, 3)).unwrap();
        for frame in &stream.frames {
            assert_eq!(frame.detections.len(), 1);
            assert_eq!(frame.detections[0].mask, frame.ground_truth.instances[0].1);
            assert_eq!(frame.detections[0].score, 0.9);
        }
    }

    #[test]
    fn drop_burst_removes_exact_frames() {
        let spec = ScenarioSpec::preset(ScenarioPreset::GapBridging, 0);
        let gen = Generator::new(spec).unwrap();
        for f in 40..120 {
            let frame = gen.frame(f);
            let expected = (50..100).contains(&f) || f >= 103;
            assert_eq!(!frame.detections.is_empty(), expected, "frame {f}");
            assert_eq!(frame.ground_truth.instances.len(), usize::from(f >= 50));
        }
    }

    #[test]
    fn spurious_birth_count_is_plausible() {
        let spec = ScenarioSpec {
            seed: 11,
            num_frames: 200,
            noise: crate::synth::NoiseSpec {
                spurious_rate: 0.3,
                ..Default::default()
            },
            ..Default::default()
        };
        let gen = Generator::new(spec).unwrap();
        let births: usize = (0..200).map(|f| gen.spurious_births_at(f)).sum();
        assert!((40..=80).contains(&births), "{births}");
    }

    #[test]
    fn seed_changes_noise_but_not_truth() {
        let a = generate(&ScenarioSpec::preset(ScenarioPreset::NoiseSuppression, 1)).unwrap();
        let b = generate(&ScenarioSpec::preset(ScenarioPreset::NoiseSuppression, 2)).unwrap();
        let a2 = generate(&ScenarioSpec::preset(ScenarioPreset::NoiseSuppression, 1)).unwrap();
        assert_eq!(a.frames, a2.frames);
        let truth = |s: &SynthStream| s.frames.iter().map(|f| f.ground_truth.clone()).collect::<Vec<_>>();
        assert_eq!(truth(&a), truth(&b));
        assert_ne!(a.frames, b.frames);
    }

    #[test]
    fn spurious_blobs_keep_clear_of_truth() {
        let stream = generate(&ScenarioSpec::preset(ScenarioPreset::NoiseSuppression, 5)).unwrap();
        let mut spurious = 0;
        for frame in &stream.frames {
            let gt = &frame.ground_truth.instances[0].1;
            for d in &frame.detections {
                match d.source {
                    SynthSource::Spurious { .. } => {
                        spurious += 1;
                        assert_eq!(d.mask.intersection_area(gt).unwrap(), 0);
                    }
                    SynthSource::Blob(_) => assert!(iou(&d.mask, gt).unwrap() > 0.9),
                }
            }
        }
        assert!(spurious > 0);
    }

    #[test]
    fn frames_are_random_access() {
        let gen = Generator::new(ScenarioSpec::preset(ScenarioPreset::NoiseSuppression, 9)).unwrap();
        let forward: Vec<_> = (0..30).map(|f| gen.frame(f)).collect();
        for f in (0..30).rev() {
            assert_eq!(gen.frame(f), forward[f as usize]);
        }
    }

    #[test]
    fn camera_pan_moves_blobs() {
        let mut spec = ScenarioSpec::preset(ScenarioPreset::Clean, 0);
        spec.camera.pan = (2.0, 0.0);
        spec.blobs[0].trajectory = vec![Waypoint { frame: 0, x: 60.0, y: 128.0 }];
        let gen = Generator::new(spec).unwrap();
        let r0 = gen.frame(0).ground_truth.instances[0].1.bounding_rect().unwrap();
        let r10 = gen.frame(10).ground_truth.instances[0].1.bounding_rect().unwrap();
        assert_eq!(r10.x0, r0.x0 + 20);
    }

    #[test]
    fn blob_leaving_frame_is_clipped() {
        let mut spec = ScenarioSpec::preset(ScenarioPreset::Clean, 0);
        spec.blobs[0].trajectory = vec![Waypoint { frame: 0, x: -500.0, y: 10.0 }];
        let frame = Generator::new(spec).unwrap().frame(0);
        assert!(frame.ground_truth.instances[0].1.is_empty());
    }
}
