use thiserror::Error;

use crate::maskcore::FrameGeometry;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid frame geometry {width}x{height}: both dimensions must be at least 1")]
    InvalidGeometry { width: usize, height: usize },

    #[error("geometry mismatch: expected {expected}, got {actual}")]
    GeometryMismatch {
        expected: FrameGeometry,
        actual: FrameGeometry,
    },

    #[error("RLE run lengths sum to {sum}, expected {expected}{location}")]
    RleLength {
        sum: u64,
        expected: u64,
        location: String,
    },

    #[error("malformed RLE string: {0}")]
    RleString(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),

    #[error("frame {got} out of order, expected frame {expected}")]
    FrameOrder { expected: u64, got: u64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("no annotation record for predicted frames: {}", format_frames(.0))]
    MissingAnnotation(Vec<(String, u64)>),

    #[error("duplicate keyframe index {frame} in video {video}")]
    DuplicateFrame { video: String, frame: u64 },

    #[error("{0}")]
    InvalidInput(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error("png: {0}")]
    Png(String),
}

impl Error {
    /// True for errors caused by the caller's data rather than by a broken
    /// internal invariant.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Invariant(_))
    }

    /// Attach a human-readable location (frame, instance) to an RLE length error.
    pub fn at(self, location: impl Into<String>) -> Self {
        match self {
            Error::RleLength { sum, expected, .. } => Error::RleLength {
                sum,
                expected,
                location: format!(" ({})", location.into()),
            },
            other => other,
        }
    }
}

fn format_frames(frames: &[(String, u64)]) -> String {
    frames
        .iter()
        .map(|(video, frame)| format!("{video}#{frame}"))
        .collect::<Vec<_>>()
        .join(", ")
}
