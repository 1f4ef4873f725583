use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::rng_from_seed;
use crate::error::{Error, Result};
use crate::eval::{mean_std, PairMetric};
use crate::par::Exec;
use crate::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub metric: String,
    pub reference: String,
    pub n_t: usize,
    pub top_k: usize,
    /// Agreement percentage of each repetition.
    pub reps: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over repetitions.
    pub std: f64,
}

impl RetrievalReport {
    pub const CSV_HEADER: [&'static str; 6] = ["metric", "reference", "n_t", "top_k", "mean", "std"];

    pub fn csv_row(&self) -> [String; 6] {
        [
            self.metric.clone(),
            self.reference.clone(),
            self.n_t.to_string(),
            self.top_k.to_string(),
            format!("{:.2}", self.mean),
            format!("{:.2}", self.std),
        ]
    }
}

/// Indices of row `i` ordered by distance, excluding `i` itself; equal
/// distances keep index order.
pub fn ranking(m: &Array2<f64>, i: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m.ncols()).filter(|&j| j != i).collect();
    idx.sort_by(|&a, &b| m[[i, a]].total_cmp(&m[[i, b]]).then(a.cmp(&b)));
    idx
}

/// Percentage of queries whose nearest neighbour under `metric` is among the
/// `top_k` nearest under `reference`. Both matrices are square over the same
/// signals.
pub fn agreement_from_matrices(metric: &Array2<f64>, reference: &Array2<f64>, top_k: usize) -> Result<f64> {
    let n = metric.nrows();
    if metric.dim() != (n, n) || reference.dim() != (n, n) {
        return Err(Error::InvalidInput("distance matrices must be square and equal in size".into()));
    }
    if n < top_k + 2 {
        return Err(Error::InvalidInput(format!("{n} signals are too few for top-{top_k} retrieval")));
    }
    let hits = (0..n)
        .filter(|&i| {
            let nearest = ranking(metric, i)[0];
            ranking(reference, i)[..top_k].contains(&nearest)
        })
        .count();
    Ok(100.0 * hits as f64 / n as f64)
}

/// Repeats the top-1-in-top-k comparison on `reps` random subsets of `n_t`
/// signals. Repetition `r` draws its subset from a generator seeded with
/// `seed + r`.
#[allow(clippy::too_many_arguments)]
pub fn nn_retrieval_agreement(
    metric: &dyn PairMetric,
    reference: &dyn PairMetric,
    signals: &[TimeSeries],
    n_t: usize,
    top_k: usize,
    reps: usize,
    seed: u64,
    exec: Exec,
) -> Result<RetrievalReport> {
    if top_k == 0 || n_t < top_k + 2 {
        return Err(Error::InvalidInput(format!(
            "n_t = {n_t} must be at least top_k + 2 = {}",
            top_k + 2
        )));
    }
    if n_t > signals.len() {
        return Err(Error::InvalidInput(format!("n_t = {n_t} exceeds the {} available signals", signals.len())));
    }
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be positive".into()));
    }
    let mut scores = Vec::with_capacity(reps);
    for r in 0..reps {
        let mut rng = rng_from_seed(seed.wrapping_add(r as u64));
        let mut idx = rand::seq::index::sample(&mut rng, signals.len(), n_t).into_vec();
        idx.sort_unstable();
        let subset: Vec<&[f32]> = idx.iter().map(|&i| signals[i].values()).collect();
        let m = metric.self_matrix(&subset, exec)?;
        let reference_m = reference.self_matrix(&subset, exec)?;
        let score = agreement_from_matrices(&m, &reference_m, top_k)?;
        log::info!("retrieval rep {r}: {} vs {} = {score:.2}%", metric.name(), reference.name());
        scores.push(score);
    }
    let (mean, std) = mean_std(&scores);
    Ok(RetrievalReport {
        metric: metric.name().to_string(),
        reference: reference.name().to_string(),
        n_t,
        top_k,
        reps: scores,
        mean,
        std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_follow_index_order() {
        let m = Array2::from_shape_vec((3, 3), vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(ranking(&m, 0), vec![1, 2]);
        assert_eq!(ranking(&m, 2), vec![0, 1]);
    }

    #[test]
    fn self_agreement_is_total() {
        let m = Array2::from_shape_fn((10, 10), |(i, j)| ((i * 7 + j * 3) % 11) as f64 + (i == j) as u8 as f64);
        assert_eq!(agreement_from_matrices(&m, &m, 5).unwrap(), 100.0);
    }

    #[test]
    fn too_few_signals_refused() {
        let m = Array2::zeros((6, 6));
        assert!(agreement_from_matrices(&m, &m, 5).is_err());
    }
}
