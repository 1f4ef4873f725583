use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A single-channel sampled signal.
///
/// Samples are stored as `f32`; every metric widens them to `f64` before
/// accumulating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub id: String,
    values: Vec<f32>,
    pub label: Option<u32>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("time series must be non-empty".into()));
        }
        Ok(Self {
            id: id.into(),
            values,
            label: None,
        })
    }

    pub fn from_f64(id: impl Into<String>, values: &[f64]) -> Result<Self> {
        Self::new(id, values.iter().map(|&v| v as f32).collect())
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.label = Some(label);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: construction rejects empty series.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    /// Contiguous window `[start, start + len)` keeping id and label.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.len() {
            return Err(Error::InvalidInput(format!(
                "window {start}+{len} does not fit in series of length {}",
                self.len()
            )));
        }
        Ok(Self {
            id: self.id.clone(),
            values: self.values[start..start + len].to_vec(),
            label: self.label,
        })
    }
}

/// A monotone, continuous alignment between two series.
///
/// Steps are stored 0-based: a path over an `n`-by-`m` grid starts at
/// `(0, 0)` and ends at `(n - 1, m - 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarpingPath {
    steps: Vec<(usize, usize)>,
}

impl WarpingPath {
    pub fn new(steps: Vec<(usize, usize)>) -> Self {
        Self { steps }
    }

    pub fn diagonal(n: usize) -> Self {
        Self::new((0..n).map(|i| (i, i)).collect())
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Steps using the 1-based convention common in the DTW literature.
    pub fn one_based(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.steps.iter().map(|&(i, j)| (i + 1, j + 1))
    }

    /// Checks the structural invariants for an `n`-by-`m` grid.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("invalid warping path: {msg}")));
        let (Some(&first), Some(&last)) = (self.steps.first(), self.steps.last()) else {
            return bad("empty".into());
        };
        if first != (0, 0) {
            return bad(format!("starts at {first:?}"));
        }
        if last != (n - 1, m - 1) {
            return bad(format!("ends at {last:?}, expected {:?}", (n - 1, m - 1)));
        }
        if self.steps.len() > n + m - 1 {
            return bad(format!("{} steps exceed n + m - 1", self.steps.len()));
        }
        for w in self.steps.windows(2) {
            let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
            if !matches!((di, dj), (1, 0) | (0, 1) | (1, 1)) {
                return bad(format!("step {:?} -> {:?}", w[0], w[1]));
            }
        }
        Ok(())
    }

    /// Total cost of the path under `cost`.
    pub fn cost<F: Fn(usize, usize) -> f64>(&self, cost: F) -> f64 {
        self.steps.iter().map(|&(i, j)| cost(i, j)).sum()
    }
}
