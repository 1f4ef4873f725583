use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{clip, compute_stats, minmax, PreprocessStats};
use crate::io::write_bytes_atomic;
use crate::{Error, Result, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub series: TimeSeries,
    /// Recording subject; a subject never spans two splits.
    pub subject: u32,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub entries: Vec<DatasetEntry>,
    pub provenance: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    provenance: String,
    signals: Vec<ManifestSignal>,
}

#[derive(Serialize, Deserialize)]
struct ManifestSignal {
    id: String,
    path: String,
    length: usize,
    label: Option<u32>,
    subject: u32,
    split: Split,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn signals(&self) -> Vec<TimeSeries> {
        self.entries.iter().map(|e| e.series.clone()).collect()
    }

    pub fn split(&self, split: Split) -> Vec<TimeSeries> {
        self.entries
            .iter()
            .filter(|e| e.split == split)
            .map(|e| e.series.clone())
            .collect()
    }

    /// Assigns whole subjects to splits: the first `train` fraction of the
    /// sorted subject ids go to train, the next `val` fraction to validation,
    /// the rest to test.
    pub fn assign_splits_by_subject(&mut self, train: f64, val: f64) {
        let subjects: Vec<u32> = self
            .entries
            .iter()
            .map(|e| e.subject)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let n = subjects.len();
        let n_train = ((n as f64 * train).round() as usize).clamp(1.min(n), n);
        let n_val = ((n as f64 * val).round() as usize).min(n - n_train);
        let split_of: BTreeMap<u32, Split> = subjects
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let split = if k < n_train {
                    Split::Train
                } else if k < n_train + n_val {
                    Split::Val
                } else {
                    Split::Test
                };
                (s, split)
            })
            .collect();
        for e in &mut self.entries {
            e.split = split_of[&e.subject];
        }
    }

    /// Fails if any subject appears in more than one split.
    pub fn check_split_integrity(&self) -> Result<()> {
        let mut seen: BTreeMap<u32, Split> = BTreeMap::new();
        for e in &self.entries {
            if let Some(prev) = seen.insert(e.subject, e.split) {
                if prev != e.split {
                    return Err(Error::InvalidInput(format!(
                        "subject {} appears in both {prev:?} and {:?}",
                        e.subject, e.split
                    )));
                }
            }
        }
        Ok(())
    }

    /// Clip to the pooled 1st/99th percentiles, then min-max scale to `[0, 1]`.
    /// Statistics come from the train split when it is non-empty.
    pub fn preprocess(&mut self) -> Result<PreprocessStats> {
        let train = self.split(Split::Train);
        let stats = if train.is_empty() {
            compute_stats(&self.signals())?
        } else {
            compute_stats(&train)?
        };
        self.apply_preprocessing(&stats)?;
        Ok(stats)
    }

    pub fn apply_preprocessing(&mut self, stats: &PreprocessStats) -> Result<()> {
        let mut signals = self.signals();
        clip(&mut signals, stats);
        minmax(&mut signals, stats)?;
        for (e, s) in self.entries.iter_mut().zip(signals) {
            e.series = s;
        }
        Ok(())
    }

    /// Writes `manifest.json` plus one little-endian `f32` file per signal.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let sig_dir = dir.join("signals");
        fs::create_dir_all(&sig_dir).map_err(|e| Error::io(&sig_dir, e))?;
        let mut signals = Vec::with_capacity(self.entries.len());
        for (k, e) in self.entries.iter().enumerate() {
            let rel = format!("signals/{k:06}.f32");
            let bytes: Vec<u8> = e.series.values().iter().flat_map(|v| v.to_le_bytes()).collect();
            let path = dir.join(&rel);
            write_bytes_atomic(&path, &bytes)?;
            signals.push(ManifestSignal {
                id: e.series.id.clone(),
                path: rel,
                length: e.series.len(),
                label: e.series.label,
                subject: e.subject,
                split: e.split,
            });
        }
        let manifest = Manifest {
            provenance: self.provenance.clone(),
            signals,
        };
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)?;
        write_bytes_atomic(&path, text.as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        let mut entries = Vec::with_capacity(manifest.signals.len());
        for m in manifest.signals {
            let p = dir.join(&m.path);
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            if bytes.len() != 4 * m.length {
                return Err(Error::format(
                    &p,
                    format!("expected {} samples, found {} bytes", m.length, bytes.len()),
                ));
            }
            let values = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let mut series = TimeSeries::new(m.id, values)?;
            series.label = m.label;
            entries.push(DatasetEntry {
                series,
                subject: m.subject,
                split: m.split,
            });
        }
        Ok(Self {
            entries,
            provenance: manifest.provenance,
        })
    }
}

/// Reads a signal stored as one decimal value per line.
pub fn import_csv_signal(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f32 = line
            .parse()
            .map_err(|_| Error::format(path, format!("line {}: `{line}` is not a number", n + 1)))?;
        values.push(v);
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    TimeSeries::new(id, values).map_err(|_| Error::format(path, "no samples"))
}
