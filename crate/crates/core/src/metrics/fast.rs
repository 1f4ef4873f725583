use crate::metrics::{check_non_empty, dtw, CostKind, DtwResult};
use crate::{Result, WarpingPath};

pub const DEFAULT_RADIUS: usize = 1;

/// FastDTW: coarsen by pairwise averaging, solve the coarse problem, project
/// its path to the finer resolution, and refine inside a window widened by
/// `radius` cells.
///
/// Series no longer than `radius + 2` are solved exactly. The returned path
/// is always a valid warping path, so the value never undercuts exact DTW.
pub fn fast_dtw<T: Copy + Into<f64>>(x: &[T], y: &[T], radius: usize, cost: CostKind) -> Result<DtwResult> {
    check_non_empty(x, y)?;
    let x: Vec<f64> = x.iter().map(|&v| v.into()).collect();
    let y: Vec<f64> = y.iter().map(|&v| v.into()).collect();
    Ok(recurse(&x, &y, radius, cost))
}

fn recurse(x: &[f64], y: &[f64], radius: usize, cost: CostKind) -> DtwResult {
    let base = radius + 2;
    if x.len() <= base || y.len() <= base {
        return dtw(x, y, cost).expect("non-empty by construction");
    }
    let coarse = recurse(&coarsen(x), &coarsen(y), radius, cost);
    let window = project(&coarse.path, x.len(), y.len(), radius);
    windowed_dtw(x, y, &window, cost)
}

fn coarsen(x: &[f64]) -> Vec<f64> {
    x.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

/// Per-row inclusive column ranges `[lo, hi]` at the finer resolution.
fn project(path: &WarpingPath, n: usize, m: usize, radius: usize) -> Vec<(usize, usize)> {
    let coarse_rows = n.div_ceil(2);
    let coarse_cols = m.div_ceil(2);
    let mut span = vec![(usize::MAX, 0usize); coarse_rows];
    for &(i, j) in path.steps() {
        let lo_i = i.saturating_sub(radius);
        let hi_i = (i + radius).min(coarse_rows - 1);
        let lo_j = j.saturating_sub(radius);
        let hi_j = (j + radius).min(coarse_cols - 1);
        for row in &mut span[lo_i..=hi_i] {
            row.0 = row.0.min(lo_j);
            row.1 = row.1.max(hi_j);
        }
    }
    let mut window = vec![(usize::MAX, 0usize); n];
    for (ci, &(lo, hi)) in span.iter().enumerate() {
        for row in [2 * ci, 2 * ci + 1] {
            if row < n {
                window[row] = (2 * lo, (2 * hi + 1).min(m - 1));
            }
        }
    }
    window
}

fn windowed_dtw(x: &[f64], y: &[f64], window: &[(usize, usize)], cost: CostKind) -> DtwResult {
    let n = x.len();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    for &(lo, hi) in window {
        offsets.push(offsets.last().unwrap() + (hi - lo + 1));
    }
    let mut acc = vec![f64::INFINITY; *offsets.last().unwrap()];
    let get = |acc: &[f64], i: usize, j: usize| -> f64 {
        let (lo, hi) = window[i];
        if j < lo || j > hi {
            f64::INFINITY
        } else {
            acc[offsets[i] + j - lo]
        }
    };

    for i in 0..n {
        let (lo, hi) = window[i];
        for j in lo..=hi {
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => get(&acc, 0, j - 1),
                (_, 0) => get(&acc, i - 1, 0),
                _ => get(&acc, i - 1, j - 1)
                    .min(get(&acc, i - 1, j))
                    .min(get(&acc, i, j - 1)),
            };
            acc[offsets[i] + j - lo] = cost.eval(x[i], y[j]) + best;
        }
    }

    let m = y.len();
    let mut steps = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while (i, j) != (0, 0) {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = get(&acc, i - 1, j - 1);
            let up = get(&acc, i - 1, j);
            let left = get(&acc, i, j - 1);
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        steps.push((i, j));
    }
    steps.reverse();
    DtwResult {
        value: get(&acc, n - 1, m - 1),
        path: WarpingPath::new(steps),
    }
}
