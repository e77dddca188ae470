use std::collections::HashMap;

use super::geometry::{BinaryMask, FrameGeometry};
use crate::error::{Error, Result};

/// Closed ring of sub-pixel vertices. The closing edge is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite coordinate".into()));
        }
        Ok(Self { vertices })
    }

    /// Parse a flat `[x0, y0, x1, y1, ...]` list, clamping into the frame.
    pub fn from_flat(coords: &[f64], geometry: FrameGeometry) -> Result<Self> {
        if !coords.len().is_multiple_of(2) {
            return Err(Error::InvalidPolygon(format!(
                "odd number of coordinates ({})",
                coords.len()
            )));
        }
        let (w, h) = (geometry.width() as f64, geometry.height() as f64);
        let mut poly = Self::new(coords.chunks_exact(2).map(|c| (c[0], c[1])).collect())?;
        for (x, y) in &mut poly.vertices {
            *x = x.clamp(0.0, w);
            *y = y.clamp(0.0, h);
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|&(x, y)| [x, y]).collect()
    }

    /// Signed shoelace area; positive for counter-clockwise rings in a
    /// y-up frame.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let (x0, y0) = self.vertices[i];
            let (x1, y1) = self.vertices[(i + 1) % n];
            acc += x0 * y1 - x1 * y0;
        }
        acc / 2.0
    }

    fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Even-odd scanline fill of one ring: a pixel is set iff its center lies
/// inside the ring.
pub fn rasterize(polygon: &Polygon, geometry: FrameGeometry) -> BinaryMask {
    if polygon.signed_area() == 0.0 {
        log::warn!("degenerate polygon ring with zero area rasterizes to an empty mask");
    }
    rasterize_even_odd(std::slice::from_ref(polygon), geometry)
}

/// Even-odd fill over several rings at once, so inner rings cut holes.
pub fn rasterize_even_odd(rings: &[Polygon], geometry: FrameGeometry) -> BinaryMask {
    let (w, h) = (geometry.width(), geometry.height());
    let mut mask = BinaryMask::empty(geometry);
    let mut crossings = Vec::new();
    for y in 0..h {
        let yc = y as f64 + 0.5;
        crossings.clear();
        for ring in rings {
            for ((x0, y0), (x1, y1)) in ring.edges() {
                if (y0 > yc) != (y1 > yc) {
                    crossings.push(x0 + (yc - y0) * (x1 - x0) / (y1 - y0));
                }
            }
        }
        crossings.sort_by(f64::total_cmp);
        let row = &mut mask.bits_mut()[y * w..(y + 1) * w];
        for pair in crossings.chunks_exact(2) {
            // centers x + 0.5 in [a, b)
            let start = (pair[0] - 0.5).ceil().max(0.0) as usize;
            let end = ((pair[1] - 0.5).ceil().max(0.0) as usize).min(w);
            if start < end {
                row[start..end].fill(true);
            }
        }
    }
    mask
}

/// COCO semantics for multi-part instances: the union of each part's fill.
pub fn rasterize_union(parts: &[Polygon], geometry: FrameGeometry) -> BinaryMask {
    let mut mask = BinaryMask::empty(geometry);
    for part in parts {
        let filled = rasterize(part, geometry);
        for (dst, src) in mask.bits_mut().iter_mut().zip(filled.bits()) {
            *dst |= *src;
        }
    }
    mask
}

/// Trace the pixel-edge boundary of `mask` into closed rings.
///
/// Rings follow pixel cracks, so `rasterize_even_odd(trace(m)) == m` for any
/// mask. Collinear runs are merged into single edges.
pub fn trace(mask: &BinaryMask) -> Vec<Polygon> {
    let g = mask.geometry();
    let (w, h) = (g.width() as i64, g.height() as i64);
    let inside = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && mask.get(x as usize, y as usize);

    // Directed crack edges with the set pixel on the left (y down).
    let mut outgoing: HashMap<(i64, i64), Vec<(i64, i64)>> = HashMap::new();
    let mut edge_count = 0usize;
    for y in 0..h {
        for x in 0..w {
            if !inside(x, y) {
                continue;
            }
            let mut push = |a: (i64, i64), b: (i64, i64)| {
                outgoing.entry(a).or_default().push(b);
                edge_count += 1;
            };
            if !inside(x, y - 1) {
                push((x + 1, y), (x, y));
            }
            if !inside(x - 1, y) {
                push((x, y), (x, y + 1));
            }
            if !inside(x, y + 1) {
                push((x, y + 1), (x + 1, y + 1));
            }
            if !inside(x + 1, y) {
                push((x + 1, y + 1), (x + 1, y));
            }
        }
    }

    let mut starts: Vec<(i64, i64)> = outgoing.keys().copied().collect();
    starts.sort_unstable_by_key(|&(x, y)| (y, x));
    let mut rings = Vec::new();
    let mut used = 0usize;
    for start in starts {
        while let Some(next) = outgoing.get_mut(&start).and_then(|v| v.pop()) {
            let mut ring = vec![start];
            let mut cur = next;
            used += 1;
            while cur != start {
                ring.push(cur);
                let Some(n) = outgoing.get_mut(&cur).and_then(|v| v.pop()) else {
                    break;
                };
                used += 1;
                cur = n;
            }
            let ring = merge_collinear(ring);
            if ring.len() >= 3 {
                let vertices = ring.into_iter().map(|(x, y)| (x as f64, y as f64)).collect();
                rings.push(Polygon { vertices });
            }
        }
    }
    debug_assert_eq!(used, edge_count);
    rings
}

fn merge_collinear(ring: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    let n = ring.len();
    if n < 3 {
        return ring;
    }
    (0..n)
        .filter(|&i| {
            let (px, py) = ring[(i + n - 1) % n];
            let (cx, cy) = ring[i];
            let (nx, ny) = ring[(i + 1) % n];
            (cx - px) * (ny - cy) - (cy - py) * (nx - cx) != 0
        })
        .map(|i| ring[i])
        .collect()
}
