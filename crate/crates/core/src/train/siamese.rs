use std::collections::BTreeMap;

use ndarray::Array3;

use crate::error::Result;
use crate::metrics::GroundTruthEntry;
use crate::nn::{
    euclidean, stack_signals, AdamConfig, AdamState, Checkpoint, ForwardCache, Gradients, Mode, ParamStore,
    SiameseModel, INFER_BATCH,
};
use crate::train::{check_pairs, run, signal_counts, LossParts, TrainConfig, TrainData, TrainOutcome, Trainer};
use crate::TimeSeries;

/// Positions grouped by series length so each group stacks into one batch.
fn by_len(lens: impl Iterator<Item = usize>) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (p, len) in lens.enumerate() {
        groups.entry(len).or_default().push(p);
    }
    groups
}

/// Loss and parameter gradients for one mini-batch of pairs, plus the
/// train-mode encoder caches whose batch statistics the caller may commit.
///
/// Both members of every pair are encoded together (duplicates included, so
/// normalization statistics see the full batch). The decoder runs once per
/// distinct signal, weighted by its multiplicity, which gives the same loss
/// and gradients as decoding every occurrence.
pub fn siamese_batch_gradients(
    model: &SiameseModel<f32>,
    batch: &[GroundTruthEntry],
    signals: &[TimeSeries],
    lambda: f64,
) -> Result<(LossParts, Gradients<f32>, Vec<ForwardCache<f32>>)> {
    check_pairs(signals, batch)?;
    let b = batch.len() as f64;
    let h = model.hidden;
    let members: Vec<usize> = batch.iter().flat_map(|e| [e.i as usize, e.j as usize]).collect();

    let mut z = vec![Vec::new(); members.len()];
    let mut groups = Vec::new();
    for (_, pos) in by_len(members.iter().map(|&s| signals[s].len())) {
        let sigs: Vec<&[f32]> = pos.iter().map(|&p| signals[members[p]].values()).collect();
        let (out, cache) = model
            .encoder
            .forward(&model.params, stack_signals(&sigs)?, Mode::Train, None)?;
        for (row, &p) in out.as_slice().unwrap().chunks_exact(h).zip(&pos) {
            z[p] = row.to_vec();
        }
        groups.push((pos, cache));
    }

    let mut dz = vec![vec![0.0f64; h]; members.len()];
    let mut approx = 0.0;
    for (k, e) in batch.iter().enumerate() {
        let (za, zb) = (&z[2 * k], &z[2 * k + 1]);
        let d = euclidean(za, zb);
        let r = d - e.value as f64;
        approx += r * r;
        // The norm has no gradient at zero distance; use zero there.
        if d > 0.0 {
            let coef = 2.0 * r / (b * d);
            for t in 0..h {
                let diff = za[t] as f64 - zb[t] as f64;
                dz[2 * k][t] += coef * diff;
                dz[2 * k + 1][t] -= coef * diff;
            }
        }
    }
    approx /= b;

    let mut grads = Gradients::zeros_like(&model.params);
    let distinct = signal_counts(members.iter().copied());
    let first_pos: Vec<usize> = distinct
        .iter()
        .map(|(s, _)| members.iter().position(|m| m == s).unwrap())
        .collect();
    let mut recon = 0.0;
    for (len, idx) in by_len(distinct.iter().map(|(s, _)| signals[*s].len())) {
        let n = idx.len();
        let mut zin = Array3::<f32>::zeros((n, 1, h));
        for (row, &u) in idx.iter().enumerate() {
            zin.slice_mut(ndarray::s![row, 0, ..])
                .iter_mut()
                .zip(&z[first_pos[u]])
                .for_each(|(d, v)| *d = *v);
        }
        let (xhat, cache) = model.decoder.forward(&model.params, zin, Mode::Train, Some(len))?;
        let xs = xhat.as_slice().unwrap();
        let mut dy = Array3::<f32>::zeros((n, 1, len));
        let dys = dy.as_slice_mut().unwrap();
        for (row, &u) in idx.iter().enumerate() {
            let (s, count) = distinct[u];
            let target = signals[s].values();
            let pred = &xs[row * len..][..len];
            let mse = pred
                .iter()
                .zip(target)
                .map(|(p, x)| (*p as f64 - *x as f64).powi(2))
                .sum::<f64>()
                / len as f64;
            recon += count as f64 * mse;
            let coef = lambda * count as f64 * 2.0 / (b * len as f64);
            for t in 0..len {
                dys[row * len + t] = (coef * (pred[t] as f64 - target[t] as f64)) as f32;
            }
        }
        if lambda > 0.0 {
            let dz_dec = model
                .decoder
                .backward(&model.params, &cache, &dy, &mut grads, true)?
                .expect("input gradient requested");
            for (row, &u) in idx.iter().enumerate() {
                let g = &dz_dec.as_slice().unwrap()[row * h..][..h];
                dz[first_pos[u]].iter_mut().zip(g).for_each(|(a, v)| *a += *v as f64);
            }
        }
    }
    recon /= b;

    let mut caches = Vec::with_capacity(groups.len());
    for (pos, cache) in groups {
        let mut dout = Array3::<f32>::zeros((pos.len(), h, 1));
        for (row, &p) in pos.iter().enumerate() {
            dout.slice_mut(ndarray::s![row, .., 0])
                .iter_mut()
                .zip(&dz[p])
                .for_each(|(d, v)| *d = *v as f32);
        }
        model.encoder.backward(&model.params, &cache, &dout, &mut grads, false)?;
        caches.push(cache);
    }
    Ok((LossParts { approx, recon }, grads, caches))
}

/// Approximation MSE of embedding distances against the reference, and the
/// mean per-pair reconstruction error (both members), in inference mode.
pub fn validate_siamese(model: &SiameseModel<f32>, signals: &[TimeSeries], pairs: &[GroundTruthEntry]) -> Result<LossParts> {
    check_pairs(signals, pairs)?;
    if pairs.is_empty() {
        return Ok(LossParts::default());
    }
    let distinct = signal_counts(pairs.iter().flat_map(|e| [e.i as usize, e.j as usize]));
    let sigs: Vec<&[f32]> = distinct.iter().map(|(s, _)| signals[*s].values()).collect();
    let z = model.embed(&sigs)?;
    let slot: std::collections::HashMap<usize, usize> = distinct.iter().enumerate().map(|(k, (s, _))| (*s, k)).collect();

    let approx = pairs
        .iter()
        .map(|e| {
            let d = euclidean(&z[slot[&(e.i as usize)]], &z[slot[&(e.j as usize)]]);
            (d - e.value as f64).powi(2)
        })
        .sum::<f64>()
        / pairs.len() as f64;

    let mut recon = 0.0;
    for (len, idx) in by_len(sigs.iter().map(|s| s.len())) {
        for chunk in idx.chunks(INFER_BATCH) {
            let mut zin = Array3::<f32>::zeros((chunk.len(), 1, model.hidden));
            for (row, &u) in chunk.iter().enumerate() {
                zin.slice_mut(ndarray::s![row, 0, ..])
                    .iter_mut()
                    .zip(&z[u])
                    .for_each(|(d, v)| *d = *v);
            }
            let xhat = model.decoder.infer(&model.params, zin, Some(len))?;
            for (row, &u) in chunk.iter().enumerate() {
                let pred = &xhat.as_slice().unwrap()[row * len..][..len];
                let mse = pred
                    .iter()
                    .zip(sigs[u])
                    .map(|(p, x)| (*p as f64 - *x as f64).powi(2))
                    .sum::<f64>()
                    / len as f64;
                recon += distinct[u].1 as f64 * mse;
            }
        }
    }
    Ok(LossParts {
        approx,
        recon: recon / pairs.len() as f64,
    })
}

struct SiameseTrainer {
    model: SiameseModel<f32>,
    adam: AdamState<f32>,
    lambda: f64,
}

impl Trainer for SiameseTrainer {
    fn train_batch(&mut self, batch: &[GroundTruthEntry], signals: &[TimeSeries]) -> Result<LossParts> {
        let (loss, grads, caches) = siamese_batch_gradients(&self.model, batch, signals, self.lambda)?;
        loss.check("training batch")?;
        self.adam.step(&mut self.model.params, &grads)?;
        for cache in &caches {
            self.model.encoder.commit_running_stats(&mut self.model.params, cache)?;
        }
        Ok(loss)
    }

    fn validate(&self, signals: &[TimeSeries], pairs: &[GroundTruthEntry]) -> Result<LossParts> {
        validate_siamese(&self.model, signals, pairs)
    }

    fn state(&self) -> (&ParamStore<f32>, &AdamState<f32>) {
        (&self.model.params, &self.adam)
    }

    fn checkpoint(&self, params: ParamStore<f32>, optimizer: AdamState<f32>) -> Checkpoint {
        let mut ckpt = Checkpoint::from_siamese(&self.model);
        ckpt.params = params;
        ckpt.optimizer = Some(optimizer);
        ckpt
    }
}

/// Joint training of encoder and decoder on `approx + lambda * recon`.
pub fn train_siamese(cfg: &TrainConfig, data: TrainData<'_>) -> Result<TrainOutcome> {
    cfg.validate()?;
    data.check()?;
    let model = SiameseModel::<f32>::new(cfg.hidden, cfg.seed)?;
    let adam = AdamState::new(AdamConfig::with_lr(cfg.lr), &model.params)?;
    let cfg = TrainConfig {
        model_kind: crate::nn::ModelKind::Siamese,
        ..cfg.clone()
    };
    run(
        &cfg,
        data,
        SiameseTrainer {
            model,
            adam,
            lambda: cfg.lambda,
        },
    )
}
