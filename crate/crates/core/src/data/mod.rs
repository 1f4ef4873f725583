//! Dataset storage, preprocessing, sampling and synthetic signal generation.

mod dataset;
mod pairs;
mod preprocess;
mod sampling;
mod synth;

pub use dataset::{import_csv_signal, Dataset, DatasetEntry, Split};
pub use pairs::{build_pair_set, PairSet};
pub use preprocess::{clip, compute_stats, minmax, normalize_dtw, percentile, PreprocessStats};
pub use sampling::{sample_lengths, sample_pairs, slice_fixed};
pub use synth::{synth_gen, SynthConfig};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The seeded generator used by every randomized operation in the crate.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
