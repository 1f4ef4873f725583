use ndarray::Array3;

use crate::error::Result;
use crate::metrics::GroundTruthEntry;
use crate::nn::{
    concat_pairs, AdamConfig, AdamState, Checkpoint, DirectModel, ForwardCache, Gradients, Mode, ModelKind, ParamStore,
};
use crate::train::{check_pairs, run, LossParts, TrainConfig, TrainData, TrainOutcome, Trainer};
use crate::TimeSeries;

/// MSE loss and gradients for one mini-batch. Pairs are zero-padded to the
/// longest series in the batch.
pub fn direct_batch_gradients(
    model: &DirectModel<f32>,
    batch: &[GroundTruthEntry],
    signals: &[TimeSeries],
) -> Result<(LossParts, Gradients<f32>, ForwardCache<f32>)> {
    check_pairs(signals, batch)?;
    let pairs: Vec<(&[f32], &[f32])> = batch
        .iter()
        .map(|e| (signals[e.i as usize].values(), signals[e.j as usize].values()))
        .collect();
    let len = pairs.iter().map(|(x, y)| x.len().max(y.len())).max().unwrap_or(0);
    let (out, cache) = model
        .net
        .forward(&model.params, concat_pairs(&pairs, len), Mode::Train, None)?;
    let b = batch.len() as f64;
    let mut dy = Array3::<f32>::zeros(out.dim());
    let mut approx = 0.0;
    for ((d, p), e) in dy.iter_mut().zip(out.iter()).zip(batch) {
        let r = *p as f64 - e.value as f64;
        approx += r * r;
        *d = (2.0 * r / b) as f32;
    }
    let mut grads = Gradients::zeros_like(&model.params);
    model.net.backward(&model.params, &cache, &dy, &mut grads, false)?;
    Ok((
        LossParts {
            approx: approx / b,
            recon: 0.0,
        },
        grads,
        cache,
    ))
}

pub fn validate_direct(model: &DirectModel<f32>, signals: &[TimeSeries], pairs: &[GroundTruthEntry]) -> Result<LossParts> {
    check_pairs(signals, pairs)?;
    if pairs.is_empty() {
        return Ok(LossParts::default());
    }
    let refs: Vec<(&[f32], &[f32])> = pairs
        .iter()
        .map(|e| (signals[e.i as usize].values(), signals[e.j as usize].values()))
        .collect();
    let pred = model.predict(&refs)?;
    let approx = pred
        .iter()
        .zip(pairs)
        .map(|(p, e)| (p - e.value as f64).powi(2))
        .sum::<f64>()
        / pairs.len() as f64;
    Ok(LossParts { approx, recon: 0.0 })
}

struct DirectTrainer {
    model: DirectModel<f32>,
    adam: AdamState<f32>,
}

impl Trainer for DirectTrainer {
    fn train_batch(&mut self, batch: &[GroundTruthEntry], signals: &[TimeSeries]) -> Result<LossParts> {
        let (loss, grads, cache) = direct_batch_gradients(&self.model, batch, signals)?;
        loss.check("training batch")?;
        self.adam.step(&mut self.model.params, &grads)?;
        self.model.net.commit_running_stats(&mut self.model.params, &cache)?;
        Ok(loss)
    }

    fn validate(&self, signals: &[TimeSeries], pairs: &[GroundTruthEntry]) -> Result<LossParts> {
        validate_direct(&self.model, signals, pairs)
    }

    fn state(&self) -> (&ParamStore<f32>, &AdamState<f32>) {
        (&self.model.params, &self.adam)
    }

    fn checkpoint(&self, params: ParamStore<f32>, optimizer: AdamState<f32>) -> Checkpoint {
        let mut ckpt = Checkpoint::from_direct(&self.model);
        ckpt.params = params;
        ckpt.optimizer = Some(optimizer);
        ckpt
    }
}

/// Regression of the reference distance from stacked pairs.
pub fn train_direct(cfg: &TrainConfig, data: TrainData<'_>) -> Result<TrainOutcome> {
    cfg.validate()?;
    data.check()?;
    let mut model = DirectModel::<f32>::new(cfg.hidden, cfg.seed)?;
    model.symmetrize = cfg.symmetrize;
    let adam = AdamState::new(AdamConfig::with_lr(cfg.lr), &model.params)?;
    let cfg = TrainConfig {
        model_kind: ModelKind::Direct,
        ..cfg.clone()
    };
    run(&cfg, data, DirectTrainer { model, adam })
}
