use super::config::TcaConfig;
use crate::maskcore::{dilate_bits, BinaryMask, Heatmap};

/// Dual-threshold segmentation of a heatmap using the config's `low`,
/// `high` and `dilation_radius`.
pub fn threshold_hysteresis(h: &Heatmap, cfg: &TcaConfig) -> BinaryMask {
    hysteresis(h, cfg.low, cfg.high, cfg.dilation_radius)
}

/// Strong pixels (`>= high`) plus every weak pixel (`low <= v < high`) whose
/// 8-connected component of `{v >= low}` touches the strong set dilated by
/// `radius`.
pub fn hysteresis(h: &Heatmap, low: f64, high: f64, radius: usize) -> BinaryMask {
    let g = h.geometry();
    let bits = hysteresis_values(h.values(), g.width(), g.height(), low, high, radius);
    BinaryMask::from_bits(g, bits).expect("same geometry")
}

pub(crate) fn hysteresis_values(
    values: &[f64],
    w: usize,
    h: usize,
    low: f64,
    high: f64,
    radius: usize,
) -> Vec<bool> {
    let candidate: Vec<bool> = values.iter().map(|&v| v >= low).collect();
    let strong: Vec<bool> = values.iter().map(|&v| v >= high).collect();
    let mut out = vec![false; values.len()];
    if !strong.iter().any(|&s| s) {
        return out;
    }
    // With radius <= 1 the dilated ring is 8-adjacent to strong pixels and
    // already inside their components, so the strong set is a sufficient seed.
    let seeds = if radius <= 1 {
        strong
    } else {
        dilate_bits(&strong, w, h, radius)
    };

    let mut stack: Vec<usize> = Vec::new();
    for (i, (&s, &c)) in seeds.iter().zip(&candidate).enumerate() {
        if s && c && !out[i] {
            out[i] = true;
            stack.push(i);
            while let Some(p) = stack.pop() {
                let (px, py) = (p % w, p / w);
                let (x0, x1) = (px.saturating_sub(1), (px + 1).min(w - 1));
                let (y0, y1) = (py.saturating_sub(1), (py + 1).min(h - 1));
                for ny in y0..=y1 {
                    for nx in x0..=x1 {
                        let q = ny * w + nx;
                        if candidate[q] && !out[q] {
                            out[q] = true;
                            stack.push(q);
                        }
                    }
                }
            }
        }
    }
    out
}
