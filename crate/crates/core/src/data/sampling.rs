use rand::Rng as _;

use crate::data::Rng;
use crate::{Error, Result, TimeSeries};

/// Cuts one contiguous window of length `len` from each signal, with the
/// offset drawn uniformly over every admissible start.
pub fn slice_fixed(signals: &[TimeSeries], len: usize, rng: &mut Rng) -> Result<Vec<TimeSeries>> {
    signals
        .iter()
        .map(|s| {
            if s.len() < len {
                return Err(Error::InvalidInput(format!(
                    "signal `{}` has length {} < slice length {len}",
                    s.id,
                    s.len()
                )));
            }
            let start = rng.random_range(0..=s.len() - len);
            s.window(start, len)
        })
        .collect()
}

/// Draws a length uniformly in `[min_len, max_len]` per signal, then slices a
/// window of that length.
pub fn sample_lengths(
    signals: &[TimeSeries],
    min_len: usize,
    max_len: usize,
    rng: &mut Rng,
) -> Result<Vec<TimeSeries>> {
    if min_len == 0 || min_len > max_len {
        return Err(Error::InvalidInput(format!(
            "length range [{min_len}, {max_len}] is empty"
        )));
    }
    signals
        .iter()
        .map(|s| {
            let len = rng.random_range(min_len..=max_len);
            slice_fixed(std::slice::from_ref(s), len, rng).map(|mut v| v.remove(0))
        })
        .collect()
}

/// Draws `n_pairs` distinct ordered pairs `(i, j)` from `0..n` without
/// replacement.
pub fn sample_pairs(n: usize, n_pairs: usize, rng: &mut Rng) -> Result<Vec<(usize, usize)>> {
    let total = n
        .checked_mul(n)
        .ok_or_else(|| Error::InvalidInput(format!("{n} signals overflow the pair space")))?;
    if n_pairs > total {
        return Err(Error::InvalidInput(format!(
            "cannot draw {n_pairs} distinct pairs from {total}"
        )));
    }
    Ok(rand::seq::index::sample(rng, total, n_pairs)
        .into_iter()
        .map(|k| (k / n, k % n))
        .collect())
}
