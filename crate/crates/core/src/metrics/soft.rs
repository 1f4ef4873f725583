use serde::{Deserialize, Serialize};

use crate::metrics::{check_non_empty, CostKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftDtwConfig {
    pub gamma: f64,
    pub cost: CostKind,
}

impl SoftDtwConfig {
    pub fn new(gamma: f64, cost: CostKind) -> Result<Self> {
        let cfg = Self { gamma, cost };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "gamma must be positive and finite, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

impl Default for SoftDtwConfig {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            cost: CostKind::Absolute,
        }
    }
}

#[inline]
fn softmin3(gamma: f64, a: f64, b: f64, c: f64) -> f64 {
    let m = a.min(b).min(c);
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    let s = (-(a - m) / gamma).exp() + (-(b - m) / gamma).exp() + (-(c - m) / gamma).exp();
    m - gamma * s.ln()
}

/// Forward table `R` of shape `(n + 1) x (m + 1)`, row-major, with
/// `R[0][0] = 0` and infinite borders.
fn forward_table(x: &[f64], y: &[f64], cfg: &SoftDtwConfig) -> Vec<f64> {
    let (n, m) = (x.len(), y.len());
    let w = m + 1;
    let mut r = vec![f64::INFINITY; (n + 1) * w];
    r[0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let d = cfg.cost.eval(x[i - 1], y[j - 1]);
            r[i * w + j] = d + softmin3(cfg.gamma, r[(i - 1) * w + j - 1], r[(i - 1) * w + j], r[i * w + j - 1]);
        }
    }
    r
}

/// SoftDTW value: `-gamma * ln(sum over paths of exp(-cost(path) / gamma))`.
///
/// Uses two rolling rows.
pub fn soft_dtw<T: Copy + Into<f64>>(x: &[T], y: &[T], cfg: &SoftDtwConfig) -> Result<f64> {
    cfg.validate()?;
    check_non_empty(x, y)?;
    let y: Vec<f64> = y.iter().map(|&v| v.into()).collect();
    let m = y.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &a in x {
        let a: f64 = a.into();
        curr[0] = f64::INFINITY;
        for j in 1..=m {
            curr[j] = cfg.cost.eval(a, y[j - 1]) + softmin3(cfg.gamma, prev[j - 1], prev[j], curr[j - 1]);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftDtwGrad {
    pub value: f64,
    /// Gradient of the value with respect to each sample of `x`.
    pub grad_x: Vec<f64>,
}

/// SoftDTW value and its gradient with respect to `x`.
///
/// The backward pass propagates the expected-alignment matrix `E` from the
/// end of the grid, then contracts it with the point-wise cost derivatives.
/// The forward table is kept in full; `E` needs only two rows.
pub fn soft_dtw_grad<T: Copy + Into<f64>>(x: &[T], y: &[T], cfg: &SoftDtwConfig) -> Result<SoftDtwGrad> {
    cfg.validate()?;
    check_non_empty(x, y)?;
    let x: Vec<f64> = x.iter().map(|&v| v.into()).collect();
    let y: Vec<f64> = y.iter().map(|&v| v.into()).collect();
    let (n, m) = (x.len(), y.len());
    let w = m + 1;
    let r = forward_table(&x, &y, cfg);
    let gamma = cfg.gamma;
    let d = |i: usize, j: usize| cfg.cost.eval(x[i - 1], y[j - 1]);

    // e_next holds row i + 1 of E (1-based), e_curr row i. Column m + 1 and
    // row n + 1 are zero except E[n+1][m+1] = 1.
    let mut e_next = vec![0.0f64; m + 2];
    let mut e_curr = vec![0.0f64; m + 2];
    let mut grad_x = vec![0.0f64; n];
    for i in (1..=n).rev() {
        e_curr.fill(0.0);
        for j in (1..=m).rev() {
            let rij = r[i * w + j];
            let mut e = 0.0;
            if i == n && j == m {
                e = 1.0;
            } else {
                if i < n {
                    e += e_next[j] * ((r[(i + 1) * w + j] - rij - d(i + 1, j)) / gamma).exp();
                }
                if j < m {
                    e += e_curr[j + 1] * ((r[i * w + j + 1] - rij - d(i, j + 1)) / gamma).exp();
                }
                if i < n && j < m {
                    e += e_next[j + 1] * ((r[(i + 1) * w + j + 1] - rij - d(i + 1, j + 1)) / gamma).exp();
                }
            }
            e_curr[j] = e;
            grad_x[i - 1] += e * cfg.cost.deriv(x[i - 1], y[j - 1]);
        }
        std::mem::swap(&mut e_next, &mut e_curr);
    }
    Ok(SoftDtwGrad {
        value: r[n * w + m],
        grad_x,
    })
}
