//! Trainers for the siamese encoder-decoder and the direct regressor.
//!
//! Both share one epoch loop: a validation pass on the untrained model
//! (epoch 0), then shuffled mini-batches over ground-truth pairs, one Adam
//! step per batch, validation after each epoch, early stopping, and a
//! checkpoint of the best validation epoch.

mod direct;
mod early_stop;
mod siamese;

pub use direct::{direct_batch_gradients, train_direct, validate_direct};
pub use early_stop::{Decision, EarlyStopping};
pub use siamese::{siamese_batch_gradients, train_siamese, validate_siamese};

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::rng_from_seed;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::metrics::{GroundTruthEntry, PairGroundTruth};
use crate::nn::{AdamState, BestRecord, Checkpoint, ModelKind, ParamStore};
use crate::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model_kind: ModelKind,
    /// Training slice length.
    pub slice_len: usize,
    /// Embedding size (siamese) or hidden width (direct).
    pub hidden: usize,
    pub batch_size: usize,
    /// Weight of the reconstruction loss.
    pub lambda: f64,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub n_signals: usize,
    pub n_pairs: usize,
    pub n_val_signals: usize,
    pub n_val_pairs: usize,
    /// Direct model only: average predictions over both channel orders.
    pub symmetrize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model_kind: ModelKind::Siamese,
            slice_len: 256,
            hidden: 128,
            batch_size: 32,
            lambda: 0.1,
            lr: 1e-3,
            max_epochs: 10,
            patience: 8,
            seed: 0,
            n_signals: 500,
            n_pairs: 20_000,
            n_val_signals: 100,
            n_val_pairs: 2_000,
            symmetrize: false,
        }
    }
}

impl TrainConfig {
    /// Full-scale settings: L 1000, 10^4 signals, 10^6 pairs, H 500, lambda
    /// 1, lr 1e-5, batch 128, 50 epochs with patience 8. The default is a
    /// desk-scale configuration that trains on one CPU in minutes.
    pub fn full_scale(model_kind: ModelKind) -> Self {
        Self {
            model_kind,
            slice_len: 1000,
            hidden: 500,
            batch_size: 128,
            lambda: 1.0,
            lr: 1e-5,
            max_epochs: 50,
            patience: 8,
            n_signals: 10_000,
            n_pairs: 1_000_000,
            n_val_signals: 1_000,
            n_val_pairs: 100_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("slice_len", self.slice_len),
            ("hidden", self.hidden),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
            ("n_signals", self.n_signals),
            ("n_pairs", self.n_pairs),
            ("n_val_signals", self.n_val_signals),
            ("n_val_pairs", self.n_val_pairs),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidInput(format!("{name} must be positive")));
        }
        if self.patience > self.max_epochs {
            return Err(Error::InvalidInput("patience exceeds max_epochs".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidInput("lambda must be a finite non-negative number".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidInput("lr must be a finite non-negative number".into()));
        }
        Ok(())
    }
}

/// Signals and ground truth for training and validation. Pair indices refer
/// to positions in the matching signal list.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub train_signals: &'a [TimeSeries],
    pub train_pairs: &'a PairGroundTruth,
    pub val_signals: &'a [TimeSeries],
    pub val_pairs: &'a PairGroundTruth,
}

impl TrainData<'_> {
    fn check(&self) -> Result<()> {
        for (signals, gt) in [(self.train_signals, self.train_pairs), (self.val_signals, self.val_pairs)] {
            if gt.is_empty() {
                return Err(Error::InvalidInput("no ground-truth pairs".into()));
            }
            gt.validate_normalized()?;
            check_pairs(signals, &gt.entries)?;
        }
        Ok(())
    }
}

pub(crate) fn check_pairs(signals: &[TimeSeries], pairs: &[GroundTruthEntry]) -> Result<()> {
    for e in pairs {
        for index in [e.i as usize, e.j as usize] {
            if index >= signals.len() {
                return Err(Error::IndexOutOfRange {
                    index,
                    len: signals.len(),
                });
            }
        }
    }
    Ok(())
}

/// Mean losses over a set of pairs. `recon` is zero for the direct model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    pub approx: f64,
    pub recon: f64,
}

impl LossParts {
    pub fn total(&self, lambda: f64) -> f64 {
        self.approx + lambda * self.recon
    }

    fn check(&self, context: &str) -> Result<()> {
        if self.approx.is_finite() && self.recon.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(format!(
                "{context}: approximation loss {}, reconstruction loss {}",
                self.approx, self.recon
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Absent for epoch 0, which only evaluates the initial model.
    pub train: Option<LossParts>,
    pub train_total: Option<f64>,
    pub val: LossParts,
    pub val_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model_kind: ModelKind,
    pub lambda: f64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    /// Kept out of serialized reports so they stay reproducible byte for byte.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl TrainReport {
    pub fn epoch(&self, epoch: usize) -> Option<&EpochRecord> {
        self.epochs.iter().find(|r| r.epoch == epoch)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write_atomic(path, |w| w.write_all(text.as_bytes()))
    }

    /// One row per epoch; training columns are empty for epoch 0.
    pub fn write_curve_csv(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut bytes);
            w.write_record([
                "epoch",
                "train_approx",
                "train_recon",
                "train_total",
                "val_approx",
                "val_recon",
                "val_total",
            ])?;
            for r in &self.epochs {
                let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([
                    r.epoch.to_string(),
                    opt(r.train.map(|t| t.approx)),
                    opt(r.train.map(|t| t.recon)),
                    opt(r.train_total),
                    r.val.approx.to_string(),
                    r.val.recon.to_string(),
                    r.val_total.to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        write_atomic(path, |w| w.write_all(&bytes))
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub checkpoint: Checkpoint,
    pub report: TrainReport,
}

/// What the shared epoch loop needs from a model-specific trainer.
trait Trainer {
    fn train_batch(&mut self, batch: &[GroundTruthEntry], signals: &[TimeSeries]) -> Result<LossParts>;
    fn validate(&self, signals: &[TimeSeries], pairs: &[GroundTruthEntry]) -> Result<LossParts>;
    fn state(&self) -> (&ParamStore<f32>, &AdamState<f32>);
    fn checkpoint(&self, params: ParamStore<f32>, optimizer: AdamState<f32>) -> Checkpoint;
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(epoch as u64)
}

fn run<T: Trainer>(cfg: &TrainConfig, data: TrainData<'_>, mut trainer: T) -> Result<TrainOutcome> {
    let start = Instant::now();
    let lambda = match cfg.model_kind {
        ModelKind::Siamese => cfg.lambda,
        ModelKind::Direct => 0.0,
    };
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut epochs = Vec::new();

    let val = trainer.validate(data.val_signals, &data.val_pairs.entries)?;
    val.check("validation before training")?;
    log::info!("epoch 0: val approx {:.6} recon {:.6}", val.approx, val.recon);
    let mut best_state = {
        let (p, o) = trainer.state();
        (p.clone(), o.clone())
    };
    stopper.observe(0, val.total(lambda));
    epochs.push(EpochRecord {
        epoch: 0,
        train: None,
        train_total: None,
        val,
        val_total: val.total(lambda),
    });

    let entries = &data.train_pairs.entries;
    let mut order: Vec<usize> = (0..entries.len()).collect();
    let mut stopped_early = false;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng_from_seed(epoch_seed(cfg.seed, epoch)));
        let mut sums = LossParts::default();
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<GroundTruthEntry> = chunk.iter().map(|&k| entries[k]).collect();
            let loss = trainer.train_batch(&batch, data.train_signals)?;
            loss.check(&format!("epoch {epoch}, batch {b}"))?;
            sums.approx += loss.approx * batch.len() as f64;
            sums.recon += loss.recon * batch.len() as f64;
        }
        let n = entries.len() as f64;
        let train = LossParts {
            approx: sums.approx / n,
            recon: sums.recon / n,
        };
        let val = trainer.validate(data.val_signals, &data.val_pairs.entries)?;
        val.check(&format!("validation after epoch {epoch}"))?;
        log::info!(
            "epoch {epoch}: train approx {:.6} recon {:.6}; val approx {:.6} recon {:.6}",
            train.approx,
            train.recon,
            val.approx,
            val.recon
        );
        epochs.push(EpochRecord {
            epoch,
            train: Some(train),
            train_total: Some(train.total(lambda)),
            val,
            val_total: val.total(lambda),
        });
        match stopper.observe(epoch, val.total(lambda)) {
            Decision::Improved => {
                let (p, o) = trainer.state();
                best_state = (p.clone(), o.clone());
            }
            Decision::Continue => {}
            Decision::Stop => {
                stopped_early = true;
                break;
            }
        }
    }

    let (best_epoch, best_val_loss) = stopper.best().expect("epoch 0 observed");
    let mut checkpoint = trainer.checkpoint(best_state.0, best_state.1);
    checkpoint.config = serde_json::to_value(cfg)?;
    checkpoint.best = Some(BestRecord {
        epoch: best_epoch,
        val_loss: best_val_loss,
    });
    let report = TrainReport {
        model_kind: cfg.model_kind,
        lambda,
        epochs,
        best_epoch,
        best_val_loss,
        stopped_early,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome { checkpoint, report })
}

/// Trains whichever model `cfg.model_kind` names.
pub fn train(cfg: &TrainConfig, data: TrainData<'_>) -> Result<TrainOutcome> {
    match cfg.model_kind {
        ModelKind::Siamese => train_siamese(cfg, data),
        ModelKind::Direct => train_direct(cfg, data),
    }
}

/// Validation losses of a checkpoint on a set of pairs. Inference mode only;
/// parameters are not touched.
pub fn validate(checkpoint: &Checkpoint, signals: &[TimeSeries], pairs: &PairGroundTruth) -> Result<LossParts> {
    match checkpoint.kind {
        ModelKind::Siamese => validate_siamese(&checkpoint.siamese()?, signals, &pairs.entries),
        ModelKind::Direct => validate_direct(&checkpoint.direct()?, signals, &pairs.entries),
    }
}

/// Multiplicity of each distinct signal index, in first-seen order.
pub(crate) fn signal_counts(indices: impl Iterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut pos: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for s in indices {
        match pos.get(&s) {
            Some(&k) => out[k].1 += 1,
            None => {
                pos.insert(s, out.len());
                out.push((s, 1));
            }
        }
    }
    out
}
