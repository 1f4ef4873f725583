//! Reference similarity measures between one-dimensional series.

mod dtw;
mod fast;
mod ground_truth;
mod soft;

pub use dtw::{dtw, dtw_brute, dtw_value, BruteForce, DtwResult, BRUTE_FORCE_CELL_LIMIT};
pub use fast::{fast_dtw, DEFAULT_RADIUS};
pub use ground_truth::{build_ground_truth, GroundTruthEntry, PairGroundTruth};
pub use soft::{soft_dtw, soft_dtw_grad, SoftDtwConfig, SoftDtwGrad};

use serde::{Deserialize, Serialize};

/// Point-wise cost between two samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    /// `|a - b|`, the one-dimensional Euclidean distance.
    #[default]
    Absolute,
    /// `(a - b)^2`.
    Squared,
}

impl CostKind {
    #[inline]
    pub fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            CostKind::Absolute => (a - b).abs(),
            CostKind::Squared => (a - b) * (a - b),
        }
    }

    /// Derivative of the cost with respect to `a`. Zero at absolute-cost ties.
    #[inline]
    pub fn deriv(self, a: f64, b: f64) -> f64 {
        match self {
            CostKind::Absolute => {
                if a > b {
                    1.0
                } else if a < b {
                    -1.0
                } else {
                    0.0
                }
            }
            CostKind::Squared => 2.0 * (a - b),
        }
    }
}

impl std::str::FromStr for CostKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "absolute" | "abs" => Ok(CostKind::Absolute),
            "squared" | "sq" => Ok(CostKind::Squared),
            other => Err(crate::Error::InvalidInput(format!("unknown cost kind `{other}`"))),
        }
    }
}

pub(crate) fn check_non_empty<T>(x: &[T], y: &[T]) -> crate::Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(crate::Error::InvalidInput("series must be non-empty".into()));
    }
    Ok(())
}
