use super::geometry::{BinaryMask, FrameGeometry};

/// Dilation by a `(2r+1) x (2r+1)` square (Chebyshev ball of radius `r`).
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let g = mask.geometry();
    let bits = dilate_bits(mask.bits(), g.width(), g.height(), radius);
    BinaryMask::from_bits(g, bits).expect("dilation preserves geometry")
}

/// Square dilation over a raw `w x h` row-major grid. Separable: a
/// horizontal then a vertical running-window "any".
pub(crate) fn dilate_bits(bits: &[bool], w: usize, h: usize, radius: usize) -> Vec<bool> {
    if radius == 0 {
        return bits.to_vec();
    }
    let mut horiz = vec![false; bits.len()];
    for y in 0..h {
        let row = &bits[y * w..(y + 1) * w];
        let out = &mut horiz[y * w..(y + 1) * w];
        sliding_any(row.iter().copied(), w, radius, |i, v| out[i] = v);
    }
    let mut result = vec![false; bits.len()];
    for x in 0..w {
        sliding_any((0..h).map(|y| horiz[y * w + x]), h, radius, |i, v| {
            result[i * w + x] = v
        });
    }
    result
}

fn sliding_any(
    line: impl Iterator<Item = bool>,
    len: usize,
    radius: usize,
    mut emit: impl FnMut(usize, bool),
) {
    // prefix[i] = number of set cells in line[..i]
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(0u32);
    let mut acc = 0u32;
    for v in line {
        acc += v as u32;
        prefix.push(acc);
    }
    for i in 0..len {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius + 1).min(len);
        emit(i, prefix[hi] > prefix[lo]);
    }
}

/// Max-pool a mask by `factor`: an output pixel is set iff any input pixel in
/// its block is set. Output geometry is `ceil(w/f) x ceil(h/f)`.
pub fn downsample_mask(mask: &BinaryMask, factor: usize) -> BinaryMask {
    let factor = factor.max(1);
    if factor == 1 {
        return mask.clone();
    }
    let g = mask.geometry();
    let out_g = g.downsampled(factor);
    let (w, ow) = (g.width(), out_g.width());
    let mut out = vec![false; out_g.len()];
    for (y, row) in mask.bits().chunks_exact(w).enumerate() {
        let out_row = &mut out[(y / factor) * ow..(y / factor + 1) * ow];
        for (x, &b) in row.iter().enumerate() {
            if b {
                out_row[x / factor] = true;
            }
        }
    }
    BinaryMask::from_bits(out_g, out).expect("pooled geometry matches")
}

/// Geometry a native mask takes after `downsample_mask(.., factor)`.
pub fn pooled_geometry(native: FrameGeometry, factor: usize) -> FrameGeometry {
    native.downsampled(factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom(w: usize, h: usize) -> FrameGeometry {
        FrameGeometry::new(w, h).unwrap()
    }

    /// Direct structuring-element expansion.
    fn dilate_oracle(m: &BinaryMask, r: usize) -> BinaryMask {
        let g = m.geometry();
        let r = r as i64;
        BinaryMask::from_fn(g, |x, y| {
            (-r..=r).any(|dy| {
                (-r..=r).any(|dx| {
                    let (sx, sy) = (x as i64 + dx, y as i64 + dy);
                    sx >= 0
                        && sy >= 0
                        && (sx as usize) < g.width()
                        && (sy as usize) < g.height()
                        && m.get(sx as usize, sy as usize)
                })
            })
        })
    }

    #[test]
    fn radius_zero_is_identity() {
        let g = geom(6, 6);
        let m = BinaryMask::from_fn(g, |x, y| (x + y) % 3 == 0);
        assert_eq!(dilate(&m, 0), m);
    }

    #[test]
    fn single_pixel_grows_to_block() {
        let g = geom(11, 11);
        let mut m = BinaryMask::empty(g);
        m.set(5, 5, true);
        let d = dilate(&m, 1);
        let expected = BinaryMask::from_fn(g, |x, y| (4..=6).contains(&x) && (4..=6).contains(&y));
        assert_eq!(d, expected);
    }

    #[test]
    fn full_mask_saturates() {
        let g = geom(5, 3);
        assert_eq!(dilate(&BinaryMask::full(g), 4), BinaryMask::full(g));
    }

    #[test]
    fn downsample_identity_and_pooling() {
        let g = geom(4, 4);
        let mut m = BinaryMask::empty(g);
        m.set(3, 2, true);
        assert_eq!(downsample_mask(&m, 1), m);
        let d = downsample_mask(&m, 4);
        assert_eq!(d.geometry(), geom(1, 1));
        assert_eq!(d.area(), 1);
        assert!(downsample_mask(&BinaryMask::empty(g), 3).is_empty());
    }

    #[test]
    fn downsample_uses_ceil_geometry() {
        let g = geom(10, 7);
        let mut m = BinaryMask::empty(g);
        m.set(9, 6, true);
        let d = downsample_mask(&m, 4);
        assert_eq!(d.geometry(), geom(3, 2));
        assert!(d.get(2, 1));
        assert_eq!(d.area(), 1);
    }

    fn arb_mask(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
        proptest::collection::vec(proptest::bool::weighted(0.1), w * h)
            .prop_map(move |bits| BinaryMask::from_bits(geom(w, h), bits).unwrap())
    }

    proptest! {
        #[test]
        fn dilation_matches_oracle(m in arb_mask(13, 9), r in 0usize..4) {
            prop_assert_eq!(dilate(&m, r), dilate_oracle(&m, r));
        }

        #[test]
        fn dilation_is_monotone(m in arb_mask(12, 12), r1 in 0usize..3, extra in 0usize..3) {
            let small = dilate(&m, r1);
            let large = dilate(&m, r1 + extra);
            prop_assert!(m.is_subset_of(&small));
            prop_assert!(small.is_subset_of(&large));
        }

        #[test]
        fn downsample_preserves_emptiness(m in arb_mask(17, 11), f in 1usize..6) {
            prop_assert_eq!(m.is_empty(), downsample_mask(&m, f).is_empty());
        }
    }
}
