//! Frame-to-frame identity assignment: IoU cost matrices solved with the
//! Hungarian algorithm, then gated by a minimum overlap.

mod associate;
mod hungarian;

use serde::{Deserialize, Serialize};

pub use associate::{associate, cost_matrix};
pub use hungarian::{hungarian, Assignment, CostMatrix};

/// Per-video track identity. Allocated monotonically, never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrackId(pub u64);

impl std::fmt::Display for TrackId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
