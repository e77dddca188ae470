//! Column-major uncompressed run-length encoding, compatible with COCO
//! `counts` semantics: runs alternate 0/1 starting with a (possibly empty)
//! 0-run, and pixels are visited column by column.

use serde::{Deserialize, Deserializer, Serialize};

use super::geometry::{BinaryMask, FrameGeometry};
use crate::error::{Error, Result};

/// RLE mask as stored in the JSON interchange: `{"size": [h, w], "counts": [...]}`.
///
/// `counts` may also be read from a COCO compressed string; it is always
/// written back as a plain list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    /// `[height, width]`, COCO order.
    pub size: [usize; 2],
    #[serde(deserialize_with = "deserialize_counts")]
    pub counts: Vec<u64>,
}

impl Rle {
    pub fn geometry(&self) -> Result<FrameGeometry> {
        FrameGeometry::new(self.size[1], self.size[0])
    }

    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).sum()
    }
}

pub fn rle_encode(mask: &BinaryMask) -> Rle {
    let g = mask.geometry();
    let (w, h) = (g.width(), g.height());
    let bits = mask.bits();
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u64;
    for x in 0..w {
        for y in 0..h {
            let v = bits[y * w + x];
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    Rle {
        size: [h, w],
        counts,
    }
}

/// Decode run lengths onto `geometry`. The runs must cover the grid exactly.
pub fn rle_decode(counts: &[u64], geometry: FrameGeometry) -> Result<BinaryMask> {
    let expected = geometry.len() as u64;
    let sum: u64 = counts.iter().sum();
    if sum != expected {
        return Err(Error::RleLength {
            sum,
            expected,
            location: String::new(),
        });
    }
    let (w, h) = (geometry.width(), geometry.height());
    let mut bits = vec![false; geometry.len()];
    let mut pos = 0usize;
    for (i, &run) in counts.iter().enumerate() {
        let run = run as usize;
        if i % 2 == 1 {
            for p in pos..pos + run {
                let (x, y) = (p / h, p % h);
                bits[y * w + x] = true;
            }
        }
        pos += run;
    }
    BinaryMask::from_bits(geometry, bits)
}

impl Rle {
    pub fn decode(&self) -> Result<BinaryMask> {
        rle_decode(&self.counts, self.geometry()?)
    }
}

/// COCO's compact string form of `counts` (6-bit groups offset by 48,
/// counts past the second stored as deltas).
pub fn counts_to_string(counts: &[u64]) -> String {
    let mut out = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let mut x = c as i64;
        if i > 2 {
            x -= counts[i - 2] as i64;
        }
        loop {
            let mut group = (x & 0x1f) as u8;
            x >>= 5;
            let more = if group & 0x10 != 0 { x != -1 } else { x != 0 };
            if more {
                group |= 0x20;
            }
            out.push((group + 48) as char);
            if !more {
                break;
            }
        }
    }
    out
}

pub fn counts_from_string(s: &str) -> Result<Vec<u64>> {
    let bytes = s.as_bytes();
    let mut counts: Vec<i64> = Vec::new();
    let mut p = 0usize;
    while p < bytes.len() {
        let mut x: i64 = 0;
        let mut k = 0u32;
        loop {
            let Some(&b) = bytes.get(p) else {
                return Err(Error::RleString("truncated group".into()));
            };
            if !(48..48 + 64).contains(&b) || k > 12 {
                return Err(Error::RleString(format!("invalid byte {b:#x} at {p}")));
            }
            let c = (b - 48) as i64;
            x |= (c & 0x1f) << (5 * k);
            p += 1;
            k += 1;
            if c & 0x20 == 0 {
                if c & 0x10 != 0 {
                    x |= -1i64 << (5 * k);
                }
                break;
            }
        }
        let m = counts.len();
        if m > 2 {
            x += counts[m - 2];
        }
        if x < 0 {
            return Err(Error::RleString(format!("negative run at position {m}")));
        }
        counts.push(x);
    }
    Ok(counts.into_iter().map(|c| c as u64).collect())
}

fn deserialize_counts<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<u64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Counts {
        Runs(Vec<u64>),
        Compressed(String),
    }
    match Counts::deserialize(d)? {
        Counts::Runs(runs) => Ok(runs),
        Counts::Compressed(s) => counts_from_string(&s).map_err(serde::de::Error::custom),
    }
}
