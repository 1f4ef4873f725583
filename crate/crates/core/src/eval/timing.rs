use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::rng_from_seed;
use crate::error::{Error, Result};
use crate::eval::PairMetric;
use crate::io::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub metric: String,
    pub length: usize,
    pub reps: usize,
    pub total_seconds: f64,
    pub per_call_seconds: f64,
    /// Seconds of every timed call.
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn row(&self, metric: &str, length: usize) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.metric == metric && r.length == length)
    }

    /// Per-call time at `long` divided by per-call time at `short`.
    pub fn ratio(&self, metric: &str, long: usize, short: usize) -> Option<f64> {
        Some(self.row(metric, long)?.per_call_seconds / self.row(metric, short)?.per_call_seconds)
    }

    /// `metric,length,reps,total_seconds,per_call_seconds`
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut bytes);
            w.write_record(["metric", "length", "reps", "total_seconds", "per_call_seconds"])?;
            for r in &self.rows {
                w.write_record([
                    r.metric.clone(),
                    r.length.to_string(),
                    r.reps.to_string(),
                    format!("{:.6}", r.total_seconds),
                    format!("{:.9}", r.per_call_seconds),
                ])?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        write_atomic(path, |w| w.write_all(&bytes))
    }
}

/// Times `reps` calls of each metric on uniform random pairs of each length,
/// after one untimed warm-up call. Everything runs on the calling thread;
/// with the `parallel` feature, work inside a metric is confined to a
/// one-thread pool.
pub fn timing_bench(metrics: &[&dyn PairMetric], lengths: &[usize], reps: usize, seed: u64) -> Result<TimingReport> {
    if reps == 0 || lengths.contains(&0) {
        return Err(Error::InvalidInput("reps and lengths must be positive".into()));
    }
    single_worker(|| {
        let mut rows = Vec::new();
        for &len in lengths {
            let mut rng = rng_from_seed(seed.wrapping_add(len as u64));
            let pairs: Vec<(Vec<f32>, Vec<f32>)> = (0..reps + 1)
                .map(|_| {
                    let mut draw = || (0..len).map(|_| rng.random::<f32>()).collect::<Vec<f32>>();
                    (draw(), draw())
                })
                .collect();
            for m in metrics {
                m.distance(&pairs[reps].0, &pairs[reps].1)?;
                let mut samples = Vec::with_capacity(reps);
                for (x, y) in &pairs[..reps] {
                    let t = Instant::now();
                    std::hint::black_box(m.distance(x, y)?);
                    samples.push(t.elapsed().as_secs_f64());
                }
                let total: f64 = samples.iter().sum();
                log::info!("{} at length {len}: {total:.4} s for {reps} calls", m.name());
                rows.push(TimingRow {
                    metric: m.name().to_string(),
                    length: len,
                    reps,
                    total_seconds: total,
                    per_call_seconds: total / reps as f64,
                    samples,
                });
            }
        }
        Ok(TimingReport { rows })
    })
}

#[cfg(feature = "parallel")]
fn single_worker<R: Send>(f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build a one-thread pool: {e}")))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn single_worker<R: Send>(f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    f()
}
