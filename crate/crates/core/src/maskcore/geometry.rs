use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width and height of a frame grid, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameGeometry {
    width: usize,
    height: usize,
}

impl FrameGeometry {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGeometry { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    /// Never true; geometries have at least one pixel.
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Geometry after pooling by `factor` (ceil division per axis).
    pub fn downsampled(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        Self {
            width: self.width.div_ceil(factor),
            height: self.height.div_ceil(factor),
        }
    }

    pub fn ensure_same(&self, other: &FrameGeometry) -> Result<()> {
        if self != other {
            return Err(Error::GeometryMismatch {
                expected: *self,
                actual: *other,
            });
        }
        Ok(())
    }
}

impl fmt::Display for FrameGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// Inclusive-exclusive pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

/// Dense row-major binary mask of one instance on a frame grid.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    geometry: FrameGeometry,
    bits: Vec<bool>,
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryMask")
            .field("geometry", &self.geometry)
            .field("area", &self.area())
            .finish()
    }
}

impl BinaryMask {
    pub fn empty(geometry: FrameGeometry) -> Self {
        Self {
            geometry,
            bits: vec![false; geometry.len()],
        }
    }

    pub fn full(geometry: FrameGeometry) -> Self {
        Self {
            geometry,
            bits: vec![true; geometry.len()],
        }
    }

    pub fn from_bits(geometry: FrameGeometry, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != geometry.len() {
            return Err(Error::InvalidInput(format!(
                "mask has {} bits, geometry {geometry} needs {}",
                bits.len(),
                geometry.len()
            )));
        }
        Ok(Self { geometry, bits })
    }

    /// Build a mask from a per-pixel predicate.
    pub fn from_fn(geometry: FrameGeometry, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(geometry.len());
        for y in 0..geometry.height() {
            for x in 0..geometry.width() {
                bits.push(f(x, y));
            }
        }
        Self { geometry, bits }
    }

    pub fn geometry(&self) -> FrameGeometry {
        self.geometry
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[self.geometry.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        let i = self.geometry.index(x, y);
        self.bits[i] = value;
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Smallest rectangle containing every set pixel, `None` for empty masks.
    pub fn bounding_rect(&self) -> Option<PixelRect> {
        let w = self.geometry.width();
        let mut rect: Option<PixelRect> = None;
        for (y, row) in self.bits.chunks_exact(w).enumerate() {
            let Some(first) = row.iter().position(|&b| b) else {
                continue;
            };
            let last = row.iter().rposition(|&b| b).unwrap_or(first);
            rect = Some(match rect {
                None => PixelRect {
                    x0: first,
                    y0: y,
                    x1: last + 1,
                    y1: y + 1,
                },
                Some(r) => PixelRect {
                    x0: r.x0.min(first),
                    y0: r.y0,
                    x1: r.x1.max(last + 1),
                    y1: y + 1,
                },
            });
        }
        rect
    }

    pub fn intersection_area(&self, other: &BinaryMask) -> Result<usize> {
        self.geometry.ensure_same(&other.geometry)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count())
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.geometry.ensure_same(&other.geometry)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a || b)
            .collect();
        Ok(BinaryMask {
            geometry: self.geometry,
            bits,
        })
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.geometry == other.geometry
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// Intersection over union of two masks on the same grid.
///
/// Two empty masks have IoU 0, so empty-vs-empty never counts as a match.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.geometry.ensure_same(&b.geometry)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&pa, &pb) in a.bits.iter().zip(&b.bits) {
        inter += (pa && pb) as usize;
        union += (pa || pb) as usize;
    }
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Dense row-major grid of confidences in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    geometry: FrameGeometry,
    values: Vec<f64>,
}

impl Heatmap {
    pub fn zeros(geometry: FrameGeometry) -> Self {
        Self::constant(geometry, 0.0)
    }

    pub fn constant(geometry: FrameGeometry, value: f64) -> Self {
        Self {
            geometry,
            values: vec![value; geometry.len()],
        }
    }

    pub fn from_values(geometry: FrameGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::InvalidInput(format!(
                "heatmap has {} values, geometry {geometry} needs {}",
                values.len(),
                geometry.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!(
                "heatmap value {v} outside [0, 1]"
            )));
        }
        Ok(Self { geometry, values })
    }

    pub fn geometry(&self) -> FrameGeometry {
        self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.geometry.index(x, y)]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(1.0, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(w: usize, h: usize) -> FrameGeometry {
        FrameGeometry::new(w, h).unwrap()
    }

    fn rect_mask(g: FrameGeometry, x0: usize, x1: usize, y0: usize, y1: usize) -> BinaryMask {
        BinaryMask::from_fn(g, |x, y| (x0..x1).contains(&x) && (y0..y1).contains(&y))
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(FrameGeometry::new(0, 4).is_err());
        assert!(FrameGeometry::new(4, 0).is_err());
    }

    #[test]
    fn iou_identical_disjoint_and_overlapping() {
        let g = geom(8, 8);
        let a = rect_mask(g, 0, 3, 0, 2);
        let b = rect_mask(g, 1, 4, 0, 2);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &rect_mask(g, 5, 8, 5, 8)).unwrap(), 0.0);
        // 6 px each, 4 shared, 8 in the union.
        assert_eq!(iou(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn iou_of_empty_masks_is_zero() {
        let g = geom(4, 4);
        assert_eq!(iou(&BinaryMask::empty(g), &BinaryMask::empty(g)).unwrap(), 0.0);
    }

    #[test]
    fn iou_geometry_mismatch_is_error() {
        let err = iou(&BinaryMask::empty(geom(4, 4)), &BinaryMask::empty(geom(4, 5)));
        assert!(matches!(err, Err(Error::GeometryMismatch { .. })));
    }

    #[test]
    fn bounding_rect_covers_set_pixels() {
        let g = geom(10, 6);
        let mut m = BinaryMask::empty(g);
        assert_eq!(m.bounding_rect(), None);
        m.set(2, 1, true);
        m.set(7, 4, true);
        assert_eq!(
            m.bounding_rect(),
            Some(PixelRect {
                x0: 2,
                y0: 1,
                x1: 8,
                y1: 5
            })
        );
    }

    #[test]
    fn heatmap_rejects_out_of_range_values() {
        assert!(Heatmap::from_values(geom(2, 1), vec![0.5, 1.5]).is_err());
        assert!(Heatmap::from_values(geom(2, 1), vec![0.5]).is_err());
    }
}
