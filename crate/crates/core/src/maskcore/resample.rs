use super::geometry::{FrameGeometry, Heatmap, PixelRect};

/// Normalized 1-D Gaussian weights for offsets `0..=ceil(3 sigma)`.
///
/// Only the non-negative half is stored; the kernel is symmetric.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let denom = 2.0 * sigma * sigma;
    let mut half: Vec<f64> = (0..=radius).map(|i| (-((i * i) as f64) / denom).exp()).collect();
    let total = half[0] + 2.0 * half[1..].iter().sum::<f64>();
    for w in &mut half {
        *w /= total;
    }
    half
}

/// Separable Gaussian blur with replicate-edge padding. `sigma == 0` is the
/// identity.
pub fn gaussian_blur(h: &Heatmap, sigma: f64) -> Heatmap {
    if sigma <= 0.0 {
        return h.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let g = h.geometry();
    let values = blur_values(h.values(), g.width(), g.height(), &kernel);
    let mut out = h.clone();
    out.values_mut().copy_from_slice(&values);
    out
}

pub(crate) fn blur_values(src: &[f64], w: usize, h: usize, half: &[f64]) -> Vec<f64> {
    let r = half.len() - 1;
    let mut dst = vec![0.0; src.len()];
    // Cells farther than r from every nonzero input are exactly zero, so only
    // the support's bounding box (grown by r) needs convolving.
    let Some((x0, y0, x1, y1)) = support(src, w, h) else {
        return dst;
    };
    let (xa, xb) = (x0.saturating_sub(r), (x1 + r).min(w));
    let (ya, yb) = (y0.saturating_sub(r), (y1 + r).min(h));

    let mut tmp = vec![0.0; src.len()];
    let mut padded = Vec::with_capacity(w.max(h) + 2 * r);
    for y in y0..y1 {
        let row = &src[y * w..(y + 1) * w];
        padded.clear();
        padded.extend(std::iter::repeat_n(row[0], r));
        padded.extend_from_slice(row);
        padded.extend(std::iter::repeat_n(row[w - 1], r));
        convolve_line(&padded, half, xa, &mut tmp[y * w + xa..y * w + xb]);
    }

    let mut column = vec![0.0; yb - ya];
    for x in xa..xb {
        padded.clear();
        padded.extend(std::iter::repeat_n(tmp[x], r));
        padded.extend((0..h).map(|y| tmp[y * w + x]));
        padded.extend(std::iter::repeat_n(tmp[(h - 1) * w + x], r));
        convolve_line(&padded, half, ya, &mut column);
        for (y, v) in (ya..yb).zip(&column) {
            dst[y * w + x] = v.clamp(0.0, 1.0);
        }
    }
    dst
}

/// Half-open bounding box `(x0, y0, x1, y1)` of the nonzero cells.
fn support(src: &[f64], w: usize, h: usize) -> Option<(usize, usize, usize, usize)> {
    let nonzero = |y: &usize| src[y * w..(y + 1) * w].iter().any(|&v| v != 0.0);
    let y0 = (0..h).find(nonzero)?;
    let y1 = (0..h).rfind(nonzero).unwrap_or(y0) + 1;
    let (mut x0, mut x1) = (w, 0);
    for y in y0..y1 {
        let row = &src[y * w..(y + 1) * w];
        if let Some(first) = row.iter().position(|&v| v != 0.0) {
            let last = row.iter().rposition(|&v| v != 0.0).unwrap_or(first);
            x0 = x0.min(first);
            x1 = x1.max(last + 1);
        }
    }
    Some((x0, y0, x1, y1))
}

/// Convolve outputs `start..start + out.len()` of a line padded by the kernel
/// radius on both sides.
#[inline]
fn convolve_line(padded: &[f64], half: &[f64], start: usize, out: &mut [f64]) {
    let r = half.len() - 1;
    for (i, o) in out.iter_mut().enumerate() {
        let c = start + i + r;
        let mut acc = half[0] * padded[c];
        for k in 1..=r {
            acc += half[k] * (padded[c - k] + padded[c + k]);
        }
        *o = acc;
    }
}

/// Bilinear upsampling with pixel centers aligned; values stay in `[0, 1]`.
pub fn upsample_heatmap(h: &Heatmap, target: FrameGeometry) -> Heatmap {
    if h.geometry() == target {
        return h.clone();
    }
    let rect = PixelRect {
        x0: 0,
        y0: 0,
        x1: target.width(),
        y1: target.height(),
    };
    let values = upsample_window(h, target, rect);
    Heatmap::from_values(target, values).expect("bilinear output stays in range")
}

/// Sample positions along one axis: (lower source index, upper index, weight).
fn axis_taps(src_len: usize, dst_len: usize, range: std::ops::Range<usize>) -> Vec<(usize, usize, f64)> {
    let scale = src_len as f64 / dst_len as f64;
    let last = (src_len - 1) as f64;
    range
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src_len - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Bilinear samples of `h` upsampled to `target`, restricted to `rect`
/// (row-major within the rect).
pub(crate) fn upsample_window(h: &Heatmap, target: FrameGeometry, rect: PixelRect) -> Vec<f64> {
    let sg = h.geometry();
    let xs = axis_taps(sg.width(), target.width(), rect.x0..rect.x1);
    let ys = axis_taps(sg.height(), target.height(), rect.y0..rect.y1);
    let src = h.values();
    let sw = sg.width();
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &(y0, y1, fy) in &ys {
        let r0 = &src[y0 * sw..(y0 + 1) * sw];
        let r1 = &src[y1 * sw..(y1 + 1) * sw];
        for &(x0, x1, fx) in &xs {
            let top = r0[x0] + fx * (r0[x1] - r0[x0]);
            let bottom = r1[x0] + fx * (r1[x1] - r1[x0]);
            out.push((top + fy * (bottom - top)).clamp(0.0, 1.0));
        }
    }
    out
}

/// Native-resolution rectangle whose bilinear samples can depend on the
/// source cells in `cells` (inclusive-exclusive, source coordinates).
/// Samples outside the returned rect only mix cells outside `cells`.
pub(crate) fn upsample_footprint(
    src: FrameGeometry,
    target: FrameGeometry,
    cells: PixelRect,
) -> PixelRect {
    let map = |lo: usize, hi: usize, sl: usize, tl: usize| {
        let scale = tl as f64 / sl as f64;
        // sample i reads cells floor(s), floor(s)+1 with s = (i+0.5)/scale - 0.5,
        // so it can touch [lo, hi) only when lo - 1 < s < hi.
        let start = ((lo as f64 - 0.5) * scale - 0.5).floor().max(0.0) as usize;
        let end = (((hi as f64 + 0.5) * scale).ceil() as usize + 1).min(tl);
        (start.min(tl), end)
    };
    let (x0, x1) = map(cells.x0, cells.x1, src.width(), target.width());
    let (y0, y1) = map(cells.y0, cells.y1, src.height(), target.height());
    PixelRect { x0, y0, x1, y1 }
}
