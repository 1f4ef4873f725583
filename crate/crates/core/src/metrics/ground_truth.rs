use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::normalize_dtw;
use crate::io::{write_atomic, write_bytes_atomic};
use crate::metrics::{dtw_value, CostKind};
use crate::par::{try_map_range, Exec};
use crate::{Error, Result, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub i: u32,
    pub j: u32,
    pub value: f32,
}

/// Reference DTW values for a sampled set of signal pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairGroundTruth {
    pub entries: Vec<GroundTruthEntry>,
}

/// Computes DTW for each requested pair, optionally dividing by the longer
/// length so values of min-max scaled signals land in `[0, 1]`.
///
/// Pairs are independent; the output order always follows `pairs`.
pub fn build_ground_truth(
    signals: &[TimeSeries],
    pairs: &[(usize, usize)],
    normalize: bool,
    cost: CostKind,
    exec: Exec,
) -> Result<PairGroundTruth> {
    let mut seen = HashSet::with_capacity(pairs.len());
    for &(i, j) in pairs {
        for index in [i, j] {
            if index >= signals.len() {
                return Err(Error::IndexOutOfRange {
                    index,
                    len: signals.len(),
                });
            }
        }
        if !seen.insert((i, j)) {
            return Err(Error::InvalidInput(format!("duplicate pair ({i}, {j})")));
        }
    }
    let entries = try_map_range(pairs.len(), exec, |k| {
        let (i, j) = pairs[k];
        let (a, b) = (&signals[i], &signals[j]);
        let raw = dtw_value(a.values(), b.values(), cost)?;
        let value = if normalize {
            normalize_dtw(raw, a.len(), b.len())?
        } else {
            raw
        };
        Ok::<_, Error>(GroundTruthEntry {
            i: i as u32,
            j: j as u32,
            value: value as f32,
        })
    })?;
    Ok(PairGroundTruth { entries })
}

impl PairGroundTruth {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fails unless every value lies in `[0, 1]` and no pair repeats.
    pub fn validate_normalized(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.entries.len());
        for e in &self.entries {
            if !(0.0..=1.0).contains(&e.value) {
                return Err(Error::InvalidInput(format!(
                    "ground-truth value {} for pair ({}, {}) is outside [0, 1]",
                    e.value, e.i, e.j
                )));
            }
            if !seen.insert((e.i, e.j)) {
                return Err(Error::InvalidInput(format!("duplicate pair ({}, {})", e.i, e.j)));
            }
        }
        Ok(())
    }

    /// Writes `.csv` (header `i,j,value`) or, for any other extension, a
    /// little-endian stream of `(u32, u32, f32)` triplets.
    pub fn save(&self, path: &Path) -> Result<()> {
        if is_csv(path) {
            self.write_csv(path)
        } else {
            self.write_binary(path)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        if is_csv(path) {
            Self::read_csv(path)
        } else {
            Self::read_binary(path)
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut bytes);
            for e in &self.entries {
                w.serialize(e)?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        write_bytes_atomic(path, &bytes)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["i", "j", "value"] {
            return Err(Error::format(path, "expected header `i,j,value`"));
        }
        let entries = r.deserialize().collect::<std::result::Result<Vec<GroundTruthEntry>, _>>()?;
        Ok(Self { entries })
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            for e in &self.entries {
                w.write_all(&e.i.to_le_bytes())?;
                w.write_all(&e.j.to_le_bytes())?;
                w.write_all(&e.value.to_le_bytes())?;
            }
            Ok(())
        })
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        if bytes.len() % 12 != 0 {
            return Err(Error::format(path, "length is not a multiple of 12 bytes"));
        }
        let word = |c: &[u8], k: usize| [c[k], c[k + 1], c[k + 2], c[k + 3]];
        let entries = bytes
            .chunks_exact(12)
            .map(|c| GroundTruthEntry {
                i: u32::from_le_bytes(word(c, 0)),
                j: u32::from_le_bytes(word(c, 4)),
                value: f32::from_le_bytes(word(c, 8)),
            })
            .collect();
        Ok(Self { entries })
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(v: &[f32]) -> TimeSeries {
        TimeSeries::new("s", v.to_vec()).unwrap()
    }

    #[test]
    fn self_pair_is_zero() {
        let s = vec![series(&[0.2, 0.4])];
        let gt = build_ground_truth(&s, &[(0, 0)], true, CostKind::Absolute, Exec::Auto).unwrap();
        assert_eq!(gt.entries, vec![GroundTruthEntry { i: 0, j: 0, value: 0.0 }]);
    }

    #[test]
    fn normalization_divides_by_longer_length() {
        // One sample differs by 0.5, the rest match: raw DTW 0.5 over length 4.
        let s = vec![series(&[0.0, 0.0, 0.0, 0.5]), series(&[0.0, 0.0, 0.0, 0.0])];
        let gt = build_ground_truth(&s, &[(0, 1)], true, CostKind::Absolute, Exec::Auto).unwrap();
        assert_eq!(gt.entries[0].value, 0.125);
    }

    #[test]
    fn rejects_bad_pairs() {
        let s = vec![series(&[0.0])];
        assert!(matches!(
            build_ground_truth(&s, &[(0, 1)], true, CostKind::Absolute, Exec::Auto),
            Err(Error::IndexOutOfRange { index: 1, len: 1 })
        ));
        assert!(build_ground_truth(&s, &[(0, 0), (0, 0)], true, CostKind::Absolute, Exec::Auto).is_err());
    }

    #[test]
    fn file_round_trips() {
        let gt = PairGroundTruth {
            entries: vec![
                GroundTruthEntry { i: 0, j: 3, value: 0.1 },
                GroundTruthEntry { i: 7, j: 2, value: 1.0 / 3.0 },
                GroundTruthEntry { i: 4_000_000, j: 1, value: f32::MIN_POSITIVE },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        for name in ["gt.csv", "gt.bin"] {
            let p = dir.path().join(name);
            gt.save(&p).unwrap();
            assert_eq!(PairGroundTruth::load(&p).unwrap(), gt);
        }
        let text = std::fs::read_to_string(dir.path().join("gt.csv")).unwrap();
        assert!(text.starts_with("i,j,value\n0,3,0.1\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn normalized_values_in_unit_interval(
            signals in prop::collection::vec(prop::collection::vec(0.0f32..=1.0, 1..30), 2..6),
        ) {
            let s: Vec<TimeSeries> = signals.iter().map(|v| series(v)).collect();
            let pairs: Vec<(usize, usize)> = (0..s.len()).flat_map(|i| (0..s.len()).map(move |j| (i, j))).collect();
            let par = build_ground_truth(&s, &pairs, true, CostKind::Absolute, Exec::Auto).unwrap();
            let seq = build_ground_truth(&s, &pairs, true, CostKind::Absolute, Exec::Sequential).unwrap();
            prop_assert_eq!(&par, &seq);
            par.validate_normalized().unwrap();
        }
    }
}
