use crate::metrics::{check_non_empty, CostKind};
use crate::{Error, Result, WarpingPath};

/// Largest `n * m` grid [`dtw_brute`] accepts.
pub const BRUTE_FORCE_CELL_LIMIT: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    pub value: f64,
    pub path: WarpingPath,
}

/// Exact DTW with the optimal warping path.
///
/// Keeps the full `n * m` accumulated-cost matrix for backtracking. Ties
/// during backtracking prefer the diagonal, then `(i - 1, j)`, then
/// `(i, j - 1)`.
pub fn dtw<T: Copy + Into<f64>>(x: &[T], y: &[T], cost: CostKind) -> Result<DtwResult> {
    check_non_empty(x, y)?;
    let (n, m) = (x.len(), y.len());
    let mut acc = vec![0.0f64; n * m];
    for i in 0..n {
        let xi = x[i].into();
        for j in 0..m {
            let c = cost.eval(xi, y[j].into());
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => acc[j - 1],
                (_, 0) => acc[(i - 1) * m],
                _ => acc[(i - 1) * m + j - 1]
                    .min(acc[(i - 1) * m + j])
                    .min(acc[i * m + j - 1]),
            };
            acc[i * m + j] = c + best;
        }
    }

    let mut steps = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (n - 1, m - 1);
    steps.push((i, j));
    while (i, j) != (0, 0) {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[(i - 1) * m + j - 1];
            let up = acc[(i - 1) * m + j];
            let left = acc[i * m + j - 1];
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
    Ok(DtwResult {
        value: acc[n * m - 1],
        path: WarpingPath::new(steps),
    })
}

/// Exact DTW value using two rolling rows.
pub fn dtw_value<T: Copy + Into<f64>>(x: &[T], y: &[T], cost: CostKind) -> Result<f64> {
    check_non_empty(x, y)?;
    // Iterate over the longer series so the rows are as short as possible.
    let (outer, inner) = if x.len() >= y.len() { (x, y) } else { (y, x) };
    let m = inner.len();
    let inner: Vec<f64> = inner.iter().map(|&v| v.into()).collect();
    let mut prev = vec![f64::INFINITY; m];
    let mut curr = vec![0.0f64; m];
    for (i, &a) in outer.iter().enumerate() {
        let a: f64 = a.into();
        let mut left = f64::INFINITY;
        for j in 0..m {
            let best = if i == 0 && j == 0 {
                0.0
            } else if j == 0 {
                prev[0]
            } else {
                prev[j - 1].min(prev[j]).min(left)
            };
            left = cost.eval(a, inner[j]) + best;
            curr[j] = left;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1])
}

/// Result of exhaustive path enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForce {
    pub value: f64,
    pub paths: u64,
}

/// Minimum path cost by enumerating every warping path.
///
/// Test oracle for [`dtw`]. Path costs accumulate from `(0, 0)` forward, the
/// same order the dynamic program uses, so the two agree bit for bit.
pub fn dtw_brute<T: Copy + Into<f64>>(x: &[T], y: &[T], cost: CostKind) -> Result<BruteForce> {
    check_non_empty(x, y)?;
    let (n, m) = (x.len(), y.len());
    if n * m > BRUTE_FORCE_CELL_LIMIT {
        return Err(Error::TooLarge {
            n,
            m,
            limit: BRUTE_FORCE_CELL_LIMIT,
        });
    }
    let x: Vec<f64> = x.iter().map(|&v| v.into()).collect();
    let y: Vec<f64> = y.iter().map(|&v| v.into()).collect();

    fn walk(x: &[f64], y: &[f64], cost: CostKind, i: usize, j: usize, acc: f64, out: &mut BruteForce) {
        let acc = acc + cost.eval(x[i], y[j]);
        if i + 1 == x.len() && j + 1 == y.len() {
            out.paths += 1;
            out.value = out.value.min(acc);
            return;
        }
        if i + 1 < x.len() && j + 1 < y.len() {
            walk(x, y, cost, i + 1, j + 1, acc, out);
        }
        if i + 1 < x.len() {
            walk(x, y, cost, i + 1, j, acc, out);
        }
        if j + 1 < y.len() {
            walk(x, y, cost, i, j + 1, acc, out);
        }
    }

    let mut out = BruteForce {
        value: f64::INFINITY,
        paths: 0,
    };
    walk(&x, &y, cost, 0, 0, 0.0, &mut out);
    Ok(out)
}
