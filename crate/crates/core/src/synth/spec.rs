use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maskcore::FrameGeometry;

/// Trajectory control point; the center moves linearly between points and
/// holds still before the first and after the last.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub frame: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlobSpec {
    pub trajectory: Vec<Waypoint>,
    pub base_radius: f64,
    /// Relative amplitude of the radial deformation, in `[0, 1)`.
    pub deform_amplitude: f64,
    /// Number of sinusoidal modes (orders 2, 3, ...).
    pub harmonics: u32,
    /// Phase advance of every mode per frame, in radians.
    pub phase_drift: f64,
    pub score: f64,
    /// First frame the blob exists (inclusive).
    pub start_frame: u64,
    /// Frame the blob stops existing (exclusive); `None` means never.
    pub end_frame: Option<u64>,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            trajectory: Vec::new(),
            base_radius: 20.0,
            deform_amplitude: 0.15,
            harmonics: 3,
            phase_drift: 0.03,
            score: 0.9,
            start_frame: 0,
            end_frame: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Independent per-frame, per-blob probability of a missed detection.
    pub drop_prob: f64,
    /// `(start, len)` frame ranges on which every blob is missed.
    pub drop_bursts: Vec<(u64, u64)>,
    /// Expected spurious births per frame.
    pub spurious_rate: f64,
    /// Inclusive `[min, max]` lifetime of a spurious blob, in frames.
    pub spurious_lifetime: (u64, u64),
    pub spurious_radius: (f64, f64),
    pub spurious_score: (f64, f64),
    /// Clearance between spurious blobs and any ground-truth blob, in pixels.
    pub spurious_margin: f64,
    /// Maximum boundary displacement of detections, in pixels.
    pub jitter_px: f64,
    /// Maximum absolute perturbation of detection scores.
    pub score_noise: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            drop_prob: 0.0,
            drop_bursts: Vec::new(),
            spurious_rate: 0.0,
            spurious_lifetime: (1, 1),
            spurious_radius: (6.0, 14.0),
            spurious_score: (0.6, 0.95),
            spurious_margin: 8.0,
            jitter_px: 0.0,
            score_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSpec {
    /// Apparent scene motion in pixels per frame.
    pub pan: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub video_id: String,
    pub width: usize,
    pub height: usize,
    pub num_frames: u64,
    /// Ground truth on frame `f` is flagged manual when `f % manual_every == 0`.
    pub manual_every: u64,
    pub blobs: Vec<BlobSpec>,
    pub noise: NoiseSpec,
    pub camera: CameraSpec,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            video_id: "synth".into(),
            width: 256,
            height: 256,
            num_frames: 100,
            manual_every: 1,
            blobs: Vec::new(),
            noise: NoiseSpec::default(),
            camera: CameraSpec::default(),
        }
    }
}

/// Ready-made scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioPreset {
    /// One static blob, no noise of any kind.
    Clean,
    /// One persistent slowly drifting blob plus short-lived spurious blobs.
    NoiseSuppression,
    /// One blob appearing at frame 50, missed on frames 100-102.
    GapBridging,
}

impl ScenarioPreset {
    pub const ALL: [ScenarioPreset; 3] = [
        ScenarioPreset::Clean,
        ScenarioPreset::NoiseSuppression,
        ScenarioPreset::GapBridging,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioPreset::Clean => "clean",
            ScenarioPreset::NoiseSuppression => "noise-suppression",
            ScenarioPreset::GapBridging => "gap-bridging",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

fn still(x: f64, y: f64) -> Vec<Waypoint> {
    vec![Waypoint { frame: 0, x, y }]
}

impl ScenarioSpec {
    pub fn preset(preset: ScenarioPreset, seed: u64) -> Self {
        match preset {
            ScenarioPreset::Clean => Self {
                seed,
                video_id: "clean".into(),
                num_frames: 60,
                blobs: vec![BlobSpec {
                    trajectory: still(128.0, 128.0),
                    base_radius: 40.0,
                    phase_drift: 0.0,
                    ..Default::default()
                }],
                ..Default::default()
            },
            ScenarioPreset::NoiseSuppression => Self {
                seed,
                video_id: "noise-suppression".into(),
                num_frames: 200,
                blobs: vec![BlobSpec {
                    trajectory: vec![
                        Waypoint { frame: 0, x: 96.0, y: 128.0 },
                        Waypoint { frame: 199, x: 160.0, y: 128.0 },
                    ],
                    base_radius: 40.0,
                    score: 0.9,
                    ..Default::default()
                }],
                noise: NoiseSpec {
                    spurious_rate: 0.3,
                    spurious_lifetime: (1, 2),
                    jitter_px: 1.0,
                    ..Default::default()
                },
                ..Default::default()
            },
            ScenarioPreset::GapBridging => Self {
                seed,
                video_id: "gap-bridging".into(),
                num_frames: 150,
                blobs: vec![BlobSpec {
                    trajectory: still(128.0, 128.0),
                    base_radius: 40.0,
                    start_frame: 50,
                    ..Default::default()
                }],
                noise: NoiseSpec {
                    drop_bursts: vec![(100, 3)],
                    ..Default::default()
                },
                ..Default::default()
            },
        }
    }

    /// The same scene on a `width x height` frame: positions scale per
    /// axis, lengths by the smaller of the two factors.
    pub fn rescaled(&self, width: usize, height: usize) -> Self {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        let s = sx.min(sy);
        let mut out = self.clone();
        out.width = width;
        out.height = height;
        for b in &mut out.blobs {
            for w in &mut b.trajectory {
                w.x *= sx;
                w.y *= sy;
            }
            b.base_radius *= s;
        }
        let n = &mut out.noise;
        n.spurious_radius = (n.spurious_radius.0 * s, n.spurious_radius.1 * s);
        n.spurious_margin *= s;
        n.jitter_px *= s;
        out.camera.pan = (self.camera.pan.0 * sx, self.camera.pan.1 * sy);
        out
    }

    pub fn geometry(&self) -> Result<FrameGeometry> {
        FrameGeometry::new(self.width, self.height)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} must lie in [0, 1]")))
            }
        };
        if self.manual_every == 0 {
            return Err(Error::Config("manual_every must be at least 1".into()));
        }
        for (i, b) in self.blobs.iter().enumerate() {
            if b.trajectory.is_empty() {
                return Err(Error::Config(format!("blob {i} has an empty trajectory")));
            }
            if b.trajectory.windows(2).any(|w| w[0].frame >= w[1].frame) {
                return Err(Error::Config(format!("blob {i} waypoints must have increasing frames")));
            }
            if !(b.base_radius > 0.0 && b.base_radius.is_finite()) {
                return Err(Error::Config(format!("blob {i} base_radius must be positive")));
            }
            if !(0.0..1.0).contains(&b.deform_amplitude) {
                return Err(Error::Config(format!("blob {i} deform_amplitude must lie in [0, 1)")));
            }
            unit("score", b.score)?;
        }
        let n = &self.noise;
        unit("drop_prob", n.drop_prob)?;
        unit("score_noise", n.score_noise)?;
        unit("spurious_score.0", n.spurious_score.0)?;
        unit("spurious_score.1", n.spurious_score.1)?;
        if !(n.spurious_rate >= 0.0 && n.spurious_rate.is_finite()) {
            return Err(Error::Config("spurious_rate must be non-negative".into()));
        }
        if n.spurious_lifetime.0 == 0 || n.spurious_lifetime.0 > n.spurious_lifetime.1 {
            return Err(Error::Config("spurious_lifetime must be 1 <= min <= max".into()));
        }
        if !(n.spurious_radius.0 > 0.0 && n.spurious_radius.0 <= n.spurious_radius.1) {
            return Err(Error::Config("spurious_radius must be 0 < min <= max".into()));
        }
        if n.spurious_score.0 > n.spurious_score.1 {
            return Err(Error::Config("spurious_score must be min <= max".into()));
        }
        if !(n.jitter_px >= 0.0 && n.spurious_margin >= 0.0) {
            return Err(Error::Config("jitter_px and spurious_margin must be non-negative".into()));
        }
        Ok(())
    }

    /// Parse TOML or JSON text (JSON when the first non-blank byte is `{`).
    pub fn from_str_any(text: &str) -> Result<Self> {
        let spec: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            toml::from_str(text)?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_any(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
