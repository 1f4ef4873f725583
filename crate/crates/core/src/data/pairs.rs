use crate::data::{rng_from_seed, sample_pairs, slice_fixed};
use crate::metrics::{build_ground_truth, CostKind, PairGroundTruth};
use crate::par::Exec;
use crate::{Error, Result, TimeSeries};

/// Signals plus normalized reference DTW for pairs sampled among them.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pub signals: Vec<TimeSeries>,
    pub truth: PairGroundTruth,
}

/// Picks up to `n_signals` signals from `pool`, slices each to `slice_len`,
/// draws `n_pairs` distinct ordered pairs and computes their normalized DTW.
/// Ground truth is computed on the final slices.
pub fn build_pair_set(
    pool: &[TimeSeries],
    n_signals: usize,
    slice_len: usize,
    n_pairs: usize,
    seed: u64,
    cost: CostKind,
    exec: Exec,
) -> Result<PairSet> {
    if pool.is_empty() {
        return Err(Error::InvalidInput("no signals to sample from".into()));
    }
    let mut rng = rng_from_seed(seed);
    let chosen: Vec<TimeSeries> = if pool.len() > n_signals {
        let mut idx = rand::seq::index::sample(&mut rng, pool.len(), n_signals).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pool[i].clone()).collect()
    } else {
        pool.to_vec()
    };
    let signals = slice_fixed(&chosen, slice_len, &mut rng)?;
    let pairs = sample_pairs(signals.len(), n_pairs, &mut rng)?;
    let truth = build_ground_truth(&signals, &pairs, true, cost, exec)?;
    Ok(PairSet { signals, truth })
}
