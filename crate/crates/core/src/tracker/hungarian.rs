use crate::error::{Error, Result};

/// Dense rectangular cost matrix, rows = tracks, columns = detections.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "cost matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite cost {v}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged cost matrix".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// Result of matching tracks (rows) to detections (columns).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    /// `(track index, detection index)`, sorted by track index.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self, cost: &CostMatrix) -> f64 {
        self.matches.iter().map(|&(r, c)| cost.get(r, c)).sum()
    }
}

/// Padding cost for the implicit rows/columns of a rectangular problem.
const PAD_COST: f64 = 1.0;

/// Minimum-cost one-to-one assignment.
///
/// Rectangular inputs are padded to square with cost 1.0, so every row on
/// the smaller side is matched. Among optimal assignments the
/// lexicographically smallest `(row, column)` sequence is returned.
pub fn hungarian(cost: &CostMatrix) -> Assignment {
    let (rows, cols) = (cost.rows, cost.cols);
    let n = rows.max(cols);
    if rows == 0 || cols == 0 {
        return Assignment {
            matches: Vec::new(),
            unmatched_tracks: (0..rows).collect(),
            unmatched_detections: (0..cols).collect(),
        };
    }
    let square: Vec<f64> = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| if r < rows && c < cols { cost.get(r, c) } else { PAD_COST })
        .collect();

    let (row_to_col, u, v) = solve_square(&square, n);
    let refined = lexicographic_refine(&square, n, &row_to_col, &u, &v);
    let total = |m: &[usize]| -> f64 { (0..n).map(|r| square[r * n + m[r]]).sum() };
    let chosen = if total(&refined) <= total(&row_to_col) {
        refined
    } else {
        row_to_col
    };

    let mut out = Assignment::default();
    let mut det_matched = vec![false; cols];
    for (r, &c) in chosen.iter().enumerate().take(rows) {
        if c < cols {
            out.matches.push((r, c));
            det_matched[c] = true;
        } else {
            out.unmatched_tracks.push(r);
        }
    }
    out.unmatched_detections = (0..cols).filter(|&c| !det_matched[c]).collect();
    out
}

/// O(n^3) shortest-augmenting-path Hungarian method with row/column
/// potentials. Returns the row-to-column matching and the potentials.
fn solve_square(a: &[f64], n: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // 1-based internally; index 0 is the virtual root column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Walk rows in order and pin each to the smallest column that still admits
/// a perfect matching inside the equality subgraph (zero reduced cost), so
/// ties resolve to the lexicographically smallest optimal assignment.
fn lexicographic_refine(a: &[f64], n: usize, start: &[usize], u: &[f64], v: &[f64]) -> Vec<usize> {
    let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 64.0 * f64::EPSILON * n as f64 * scale;
    let mut tight = vec![false; n * n];
    for r in 0..n {
        for c in 0..n {
            tight[r * n + c] = a[r * n + c] - u[r] - v[c] <= tol;
        }
        tight[r * n + start[r]] = true;
    }

    let mut row_to_col = start.to_vec();
    let mut col_to_row = vec![0usize; n];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }
    let mut row_fixed = vec![false; n];
    let mut col_fixed = vec![false; n];

    for i in 0..n {
        for j in 0..n {
            if col_fixed[j] || !tight[i * n + j] {
                continue;
            }
            if row_to_col[i] == j {
                break;
            }
            // Move i onto j; the row displaced from j must reach i's old column.
            let displaced = col_to_row[j];
            let freed = row_to_col[i];
            let mut trial_r2c = row_to_col.clone();
            let mut trial_c2r = col_to_row.clone();
            trial_r2c[i] = j;
            trial_c2r[j] = i;
            trial_c2r[freed] = usize::MAX;
            row_fixed[i] = true;
            col_fixed[j] = true;
            let mut visited = vec![false; n];
            let ok = augment(
                displaced,
                n,
                &tight,
                &row_fixed,
                &col_fixed,
                &mut visited,
                &mut trial_r2c,
                &mut trial_c2r,
            );
            row_fixed[i] = false;
            col_fixed[j] = false;
            if ok {
                row_to_col = trial_r2c;
                col_to_row = trial_c2r;
                break;
            }
        }
        row_fixed[i] = true;
        col_fixed[row_to_col[i]] = true;
    }
    row_to_col
}

#[allow(clippy::too_many_arguments)]
fn augment(
    row: usize,
    n: usize,
    tight: &[bool],
    row_fixed: &[bool],
    col_fixed: &[bool],
    visited: &mut [bool],
    r2c: &mut [usize],
    c2r: &mut [usize],
) -> bool {
    for c in 0..n {
        if col_fixed[c] || visited[c] || !tight[row * n + c] {
            continue;
        }
        visited[c] = true;
        let owner = c2r[c];
        let reachable = owner == usize::MAX
            || (!row_fixed[owner] && augment(owner, n, tight, row_fixed, col_fixed, visited, r2c, c2r));
        if reachable {
            r2c[row] = c;
            c2r[c] = row;
            return true;
        }
    }
    false
}
