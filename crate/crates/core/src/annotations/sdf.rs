use crate::maskcore::BinaryMask;

/// Squared Euclidean distance from every pixel center to the nearest `true`
/// entry of `features` (row-major `w x h`); `f64::INFINITY` when there is
/// none. Exact, separable lower-envelope algorithm.
pub fn squared_distance_transform(features: &[bool], w: usize, h: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = features
        .iter()
        .map(|&f| if f { 0.0 } else { f64::INFINITY })
        .collect();
    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        edt_1d(&f[..h], &mut d[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = d[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        edt_1d(&f[..w], &mut d[..w], &mut v, &mut z);
        grid[y * w..(y + 1) * w].copy_from_slice(&d[..w]);
    }
    grid
}

fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    let mut started = false;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        if !started {
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            started = true;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                // only reachable for k > 0 since z[0] = -inf
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    if !started {
        d.fill(f64::INFINITY);
        return;
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

/// Signed distance of every pixel to the mask boundary (negative inside),
/// measured from pixel centers with the boundary placed half a pixel from
/// the nearest opposite-side center. Distances to a side that does not
/// exist are capped at `cap`.
pub fn signed_distance(mask: &BinaryMask, cap: f64) -> Vec<f64> {
    let g = mask.geometry();
    let (w, h) = (g.width(), g.height());
    let bits = mask.bits();
    let outside: Vec<bool> = bits.iter().map(|&b| !b).collect();
    let to_inside = squared_distance_transform(bits, w, h);
    let to_outside = squared_distance_transform(&outside, w, h);
    bits.iter()
        .zip(to_inside.iter().zip(&to_outside))
        .map(|(&b, (&di, &do_))| {
            if b {
                -(do_.sqrt() - 0.5).min(cap)
            } else {
                (di.sqrt() - 0.5).min(cap)
            }
        })
        .collect()
}
