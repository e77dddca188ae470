use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which mask represents a track when building the IoU cost matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchAgainst {
    /// The raw (downsampled) detection the track last absorbed.
    Raw,
    /// The track's last stabilized output, falling back to the last raw
    /// detection while the output is still empty.
    #[default]
    Stabilized,
}

/// Every knob of the aggregation pipeline. Spatial quantities are in
/// downsampled pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TcaConfig {
    /// EMA weight of the current frame's confidence.
    pub alpha: f64,
    pub downsample_factor: usize,
    /// Detections a pixel needs before its heatmap may grow.
    pub min_present: u32,
    /// Multiplicative heatmap decay per frame without a detection.
    pub decay_gamma: f64,
    pub sigma: f64,
    pub low: f64,
    pub high: f64,
    pub dilation_radius: usize,
    pub iou_gate: f64,
    pub max_absent_frames: u32,
    pub match_against: MatchAgainst,
    /// Zero a pixel's present counter whenever it goes undetected.
    pub reset_present_on_absence: bool,
    /// Feed the blurred heatmap back into the persistent state.
    pub smooth_in_place: bool,
}

impl Default for TcaConfig {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            downsample_factor: 4,
            min_present: 3,
            decay_gamma: 0.9,
            sigma: 2.0,
            low: 0.3,
            high: 0.6,
            dilation_radius: 1,
            iou_gate: 0.1,
            max_absent_frames: 30,
            match_against: MatchAgainst::Stabilized,
            reset_present_on_absence: false,
            smooth_in_place: false,
        }
    }
}

/// Named gain/decay regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Moving cameras: react quickly, forget quickly.
    FastGainFastDecay,
    /// Stationary cameras: integrate over long windows.
    SlowGainSlowDecay,
    /// Safety-first: confirm fast, hold on to detections.
    FastGainSlowDecay,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::FastGainFastDecay,
        Preset::SlowGainSlowDecay,
        Preset::FastGainSlowDecay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::FastGainFastDecay => "fast-gain-fast-decay",
            Preset::SlowGainSlowDecay => "slow-gain-slow-decay",
            Preset::FastGainSlowDecay => "fast-gain-slow-decay",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl TcaConfig {
    pub fn preset(preset: Preset) -> Self {
        let (alpha, decay_gamma, min_present) = match preset {
            Preset::FastGainFastDecay => (0.7, 0.6, 2),
            Preset::SlowGainSlowDecay => (0.2, 0.95, 4),
            Preset::FastGainSlowDecay => (0.7, 0.95, 2),
        };
        Self {
            alpha,
            decay_gamma,
            min_present,
            ..Self::default()
        }
    }

    /// Configuration under which every stage degenerates to the identity:
    /// detections scoring above 0.5 come out unchanged.
    pub fn identity() -> Self {
        Self {
            alpha: 1.0,
            downsample_factor: 1,
            min_present: 1,
            decay_gamma: 0.0,
            sigma: 0.0,
            low: 0.5,
            high: 0.5,
            dilation_radius: 0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} must lie in [0, 1]")))
            }
        };
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha = {} must lie in (0, 1]", self.alpha)));
        }
        if !(self.decay_gamma >= 0.0 && self.decay_gamma < 1.0) {
            return Err(Error::Config(format!(
                "decay_gamma = {} must lie in [0, 1)",
                self.decay_gamma
            )));
        }
        unit("low", self.low)?;
        unit("high", self.high)?;
        unit("iou_gate", self.iou_gate)?;
        if self.low > self.high {
            return Err(Error::Config(format!(
                "low = {} exceeds high = {}",
                self.low, self.high
            )));
        }
        if self.min_present < 1 {
            return Err(Error::Config("min_present must be at least 1".into()));
        }
        if self.downsample_factor < 1 {
            return Err(Error::Config("downsample_factor must be at least 1".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma = {} must be >= 0", self.sigma)));
        }
        Ok(())
    }

    /// Parse TOML or JSON text (JSON when the first non-blank byte is `{`).
    pub fn from_str_any(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            toml::from_str(text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_any(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
