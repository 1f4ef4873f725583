use serde::{Deserialize, Serialize};

use crate::{Error, Result, TimeSeries};

/// Dataset-wide percentile and range statistics.
///
/// `min` and `max` describe the data after clipping to `[p1, p99]`. All four
/// values are representable as `f32`, so clipped samples hit them exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub p1: f64,
    pub p99: f64,
    pub min: f64,
    pub max: f64,
}

/// Percentile of sorted data with linear interpolation between order
/// statistics (`q` in `[0, 100]`).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Pools every sample of every signal and computes the 1st/99th percentiles.
pub fn compute_stats(signals: &[TimeSeries]) -> Result<PreprocessStats> {
    let mut pooled: Vec<f64> = signals.iter().flat_map(|s| s.values().iter().map(|&v| v as f64)).collect();
    if pooled.is_empty() {
        return Err(Error::InvalidInput("cannot compute statistics of an empty dataset".into()));
    }
    if let Some(bad) = pooled.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("dataset sample {bad}")));
    }
    pooled.sort_by(f64::total_cmp);
    let as_f32 = |v: f64| v as f32 as f64;
    let p1 = as_f32(percentile(&pooled, 1.0));
    let p99 = as_f32(percentile(&pooled, 99.0));
    Ok(PreprocessStats {
        p1,
        p99,
        min: pooled[0].max(p1),
        max: pooled[pooled.len() - 1].min(p99),
    })
}

/// Replaces samples below `p1` by `p1` and above `p99` by `p99`.
pub fn clip(signals: &mut [TimeSeries], stats: &PreprocessStats) {
    let (lo, hi) = (stats.p1 as f32, stats.p99 as f32);
    for s in signals {
        for v in s.values_mut() {
            *v = v.clamp(lo, hi);
        }
    }
}

/// Maps `[min, max]` affinely onto `[0, 1]`.
pub fn minmax(signals: &mut [TimeSeries], stats: &PreprocessStats) -> Result<()> {
    if !(stats.max > stats.min) {
        return Err(Error::Degenerate(format!(
            "min-max scaling needs max > min, got min {} max {}",
            stats.min, stats.max
        )));
    }
    let span = stats.max - stats.min;
    for s in signals {
        for v in s.values_mut() {
            *v = (((*v as f64) - stats.min) / span) as f32;
        }
    }
    Ok(())
}

/// DTW of min-max scaled series divided by the longer length, which bounds
/// it to `[0, 1]` under absolute cost.
pub fn normalize_dtw(raw: f64, len_x: usize, len_y: usize) -> Result<f64> {
    if raw < 0.0 || raw.is_nan() {
        return Err(Error::InvalidInput(format!("raw DTW must be non-negative, got {raw}")));
    }
    let longest = len_x.max(len_y);
    if longest == 0 {
        return Err(Error::InvalidInput("series lengths must be positive".into()));
    }
    Ok(raw / longest as f64)
}
