use std::f64::consts::TAU;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{rng_from_seed, Dataset, DatasetEntry, Split};
use crate::{Error, Result, TimeSeries};

/// Frequency bands (Hz) loosely following the classic EEG rhythms.
const EEG_BANDS: [(f64, f64); 5] = [(0.5, 2.0), (4.0, 7.0), (9.0, 12.0), (14.0, 20.0), (24.0, 32.0)];

/// Parameters of the synthetic EEG-like generator.
///
/// Each class draws its sinusoid frequencies from its own band. Subjects
/// scale their signals by a common gain, which gives DTW something to rank
/// within a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub signals_per_class: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Virtual sampling rate in Hz.
    pub sampling_rate: f64,
    /// One `(low, high)` band per class, in Hz. Empty means the first
    /// `n_classes` EEG-like default bands.
    pub bands: Vec<(f64, f64)>,
    /// Sinusoids summed per signal.
    pub components: usize,
    /// Stationary standard deviation of the AR(1) noise.
    pub noise_level: f64,
    pub ar_coeff: f64,
    pub n_subjects: usize,
    /// Subject gains are uniform in `[1 - spread, 1 + spread]`.
    pub gain_spread: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            bands: Vec::new(),
            ..Self::eeg_like(5, 150, 512, 0)
        }
    }
}

impl SynthConfig {
    /// `n_classes` classes (at most five) using the EEG-like default bands.
    pub fn eeg_like(n_classes: usize, signals_per_class: usize, len: usize, seed: u64) -> Self {
        Self {
            n_classes,
            signals_per_class,
            min_len: len,
            max_len: len,
            sampling_rate: 100.0,
            bands: EEG_BANDS.iter().copied().take(n_classes).collect(),
            components: 1,
            noise_level: 0.2,
            ar_coeff: 0.5,
            n_subjects: 20,
            gain_spread: 0.15,
            seed,
        }
    }

    /// The configured bands, or the default ones when none are given.
    pub fn class_bands(&self) -> Vec<(f64, f64)> {
        if self.bands.is_empty() {
            EEG_BANDS.iter().copied().take(self.n_classes).collect()
        } else {
            self.bands.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(format!("synthetic config: {m}")));
        if self.n_classes == 0 || self.signals_per_class == 0 || self.components == 0 || self.n_subjects == 0 {
            return bad("counts must be positive".into());
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad(format!("length range [{}, {}] is empty", self.min_len, self.max_len));
        }
        let bands = self.class_bands();
        if bands.len() != self.n_classes {
            return bad(format!("{} bands for {} classes", bands.len(), self.n_classes));
        }
        let nyquist = self.sampling_rate / 2.0;
        for &(lo, hi) in &bands {
            if !(lo > 0.0 && lo <= hi && hi < nyquist) {
                return bad(format!("band ({lo}, {hi}) must lie in (0, {nyquist})"));
            }
        }
        if !(0.0..1.0).contains(&self.ar_coeff.abs()) || self.noise_level < 0.0 {
            return bad("noise parameters out of range".into());
        }
        if !(0.0..1.0).contains(&self.gain_spread) {
            return bad("gain spread must lie in [0, 1)".into());
        }
        Ok(())
    }
}

/// Generates a labelled dataset; splits are assigned by subject (70/15/15).
pub fn synth_gen(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let gains: Vec<f64> = (0..cfg.n_subjects)
        .map(|_| 1.0 + cfg.gain_spread * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    let innovation = cfg.noise_level * (1.0 - cfg.ar_coeff * cfg.ar_coeff).sqrt();

    let mut entries = Vec::with_capacity(cfg.n_classes * cfg.signals_per_class);
    for (class, &(lo, hi)) in cfg.class_bands().iter().enumerate() {
        for k in 0..cfg.signals_per_class {
            let subject = rng.random_range(0..cfg.n_subjects);
            let len = rng.random_range(cfg.min_len..=cfg.max_len);
            let waves: Vec<(f64, f64, f64)> = (0..cfg.components)
                .map(|_| {
                    let freq = rng.random_range(lo..=hi);
                    let phase = rng.random_range(0.0..TAU);
                    let amp = rng.random_range(0.5..=1.0);
                    (freq, phase, amp)
                })
                .collect();
            let mut noise = cfg.noise_level * rng.sample::<f64, _>(StandardNormal);
            let values = (0..len)
                .map(|t| {
                    let time = t as f64 / cfg.sampling_rate;
                    let clean: f64 = waves.iter().map(|&(f, p, a)| a * (TAU * f * time + p).sin()).sum();
                    noise = cfg.ar_coeff * noise + innovation * rng.sample::<f64, _>(StandardNormal);
                    (gains[subject] * clean + noise) as f32
                })
                .collect();
            entries.push(DatasetEntry {
                series: TimeSeries::new(format!("c{class}_{k:05}"), values)?.with_label(class as u32),
                subject: subject as u32,
                split: Split::Train,
            });
        }
    }
    let mut ds = Dataset {
        entries,
        provenance: format!("synthetic eeg-like generator, seed {}", cfg.seed),
    };
    ds.assign_splits_by_subject(0.7, 0.15);
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_under_seed() {
        let cfg = SynthConfig::eeg_like(2, 5, 64, 7);
        assert_eq!(synth_gen(&cfg).unwrap(), synth_gen(&cfg).unwrap());
        let other = SynthConfig { seed: 8, ..cfg.clone() };
        assert_ne!(synth_gen(&cfg).unwrap(), synth_gen(&other).unwrap());
    }

    #[test]
    fn single_class_labels() {
        let ds = synth_gen(&SynthConfig::eeg_like(1, 10, 32, 1)).unwrap();
        assert!(ds.entries.iter().all(|e| e.series.label == Some(0)));
        ds.check_split_integrity().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = SynthConfig::eeg_like(2, 5, 64, 7);
        cfg.bands[1] = (10.0, 60.0);
        assert!(synth_gen(&cfg).is_err());
        let cfg = SynthConfig { signals_per_class: 0, ..SynthConfig::eeg_like(2, 5, 64, 7) };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn lengths_within_range() {
        let cfg = SynthConfig {
            min_len: 40,
            max_len: 60,
            ..SynthConfig::eeg_like(3, 20, 40, 3)
        };
        let ds = synth_gen(&cfg).unwrap();
        assert!(ds.entries.iter().all(|e| (40..=60).contains(&e.series.len())));
    }
}
