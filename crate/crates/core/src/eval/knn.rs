use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::rng_from_seed;
use crate::error::{Error, Result};
use crate::eval::{mean_std, PairMetric};
use crate::par::Exec;
use crate::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifReport {
    pub metric: String,
    pub k: usize,
    pub n_classes: usize,
    /// Macro-F1 of each repetition.
    pub reps: Vec<f64>,
    /// Per-class F1 of each repetition.
    pub per_class: Vec<Vec<f64>>,
    pub mean: f64,
    pub std: f64,
}

impl ClassifReport {
    pub const CSV_HEADER: [&'static str; 5] = ["metric", "k", "n_classes", "mean", "std"];

    pub fn csv_row(&self) -> [String; 5] {
        [
            self.metric.clone(),
            self.k.to_string(),
            self.n_classes.to_string(),
            format!("{:.4}", self.mean),
            format!("{:.4}", self.std),
        ]
    }
}

/// Majority vote among the `k` nearest training signals (distance ties keep
/// index order). Vote ties go to the class with the smaller mean distance
/// among its voters, then to the lower class id.
pub fn knn_predict(dist: &Array2<f64>, train_labels: &[u32], k: usize) -> Result<Vec<u32>> {
    if k == 0 || k > train_labels.len() || dist.ncols() != train_labels.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} with {} training signals and a {:?} distance matrix",
            train_labels.len(),
            dist.dim()
        )));
    }
    Ok(dist
        .rows()
        .into_iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            let mut votes: std::collections::BTreeMap<u32, (usize, f64)> = Default::default();
            for &j in &idx[..k] {
                let v = votes.entry(train_labels[j]).or_default();
                v.0 += 1;
                v.1 += row[j];
            }
            let mut best: Option<(u32, usize, f64)> = None;
            for (&class, &(count, sum)) in &votes {
                let mean = sum / count as f64;
                let better = match best {
                    None => true,
                    Some((_, bc, bm)) => count > bc || (count == bc && mean < bm),
                };
                if better {
                    best = Some((class, count, mean));
                }
            }
            best.expect("k >= 1").0
        })
        .collect())
}

/// Per-class F1 for classes `0..n_classes` and their unweighted mean. A class
/// with no true and no predicted members scores 0.
pub fn macro_f1(truth: &[u32], pred: &[u32], n_classes: usize) -> (f64, Vec<f64>) {
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        if t == p {
            if let Some(c) = tp.get_mut(t as usize) {
                *c += 1;
            }
        } else {
            if let Some(c) = fp.get_mut(p as usize) {
                *c += 1;
            }
            if let Some(c) = fn_.get_mut(t as usize) {
                *c += 1;
            }
        }
    }
    let per_class: Vec<f64> = (0..n_classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .collect();
    let mean = if n_classes == 0 {
        0.0
    } else {
        per_class.iter().sum::<f64>() / n_classes as f64
    };
    (mean, per_class)
}

/// KNN macro-F1 over `reps` random 50/50 splits of labelled signals.
/// Repetition `r` shuffles with a generator seeded by `seed + r`. When
/// `n_classes` is `None` it is one more than the largest label.
pub fn knn_macro_f1(
    metric: &dyn PairMetric,
    signals: &[TimeSeries],
    k: usize,
    reps: usize,
    n_classes: Option<usize>,
    seed: u64,
    exec: Exec,
) -> Result<ClassifReport> {
    let labels: Vec<u32> = signals
        .iter()
        .map(|s| {
            s.label
                .ok_or_else(|| Error::InvalidInput(format!("signal `{}` has no label", s.id)))
        })
        .collect::<Result<_>>()?;
    if signals.len() < 2 || reps == 0 {
        return Err(Error::InvalidInput("need at least two signals and one repetition".into()));
    }
    let n_classes = n_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| *m as usize + 1));
    let mut scores = Vec::with_capacity(reps);
    let mut per_class = Vec::with_capacity(reps);
    for r in 0..reps {
        let mut order: Vec<usize> = (0..signals.len()).collect();
        order.shuffle(&mut rng_from_seed(seed.wrapping_add(r as u64)));
        let (train, test) = order.split_at(signals.len() / 2);
        let train_labels: Vec<u32> = train.iter().map(|&i| labels[i]).collect();
        for c in 0..n_classes as u32 {
            if !train_labels.contains(&c) {
                log::warn!("repetition {r}: class {c} has no training signals");
            }
        }
        let train_s: Vec<&[f32]> = train.iter().map(|&i| signals[i].values()).collect();
        let test_s: Vec<&[f32]> = test.iter().map(|&i| signals[i].values()).collect();
        let dist = metric.cross_matrix(&test_s, &train_s, exec)?;
        let pred = knn_predict(&dist, &train_labels, k.min(train_labels.len()))?;
        let truth: Vec<u32> = test.iter().map(|&i| labels[i]).collect();
        let (mf1, pc) = macro_f1(&truth, &pred, n_classes);
        log::info!("knn rep {r}: {} macro-F1 {mf1:.4}", metric.name());
        scores.push(mf1);
        per_class.push(pc);
    }
    let (mean, std) = mean_std(&scores);
    Ok(ClassifReport {
        metric: metric.name().to_string(),
        k,
        n_classes,
        reps: scores,
        per_class,
        mean,
        std,
    })
}
