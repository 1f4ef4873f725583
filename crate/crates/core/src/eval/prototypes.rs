use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::data::rng_from_seed;
use crate::error::{Error, Result};
use crate::eval::{MetricHandle, MetricKind, PairMetric};
#[cfg(test)]
use crate::eval::MetricSpec;
use crate::metrics::soft_dtw_grad;
use crate::nn::{
    concat_pairs, euclidean, stack_signals, AdamConfig, AdamState, Gradients, Mode, ParamArray, ParamStore,
    INFER_BATCH,
};
use crate::par::{try_map_range, Exec};
use crate::TimeSeries;

/// A metric that can push gradients back to its inputs.
pub trait DifferentiableMetric: PairMetric {
    /// Gradients of `sum_ij weights[i, j] * distance(a[i], b[j])` with
    /// respect to each series of `b`, and of `a` when `with_a` is set.
    #[allow(clippy::type_complexity)]
    fn cross_grad(
        &self,
        a: &[&[f32]],
        b: &[&[f32]],
        weights: &Array2<f64>,
        with_a: bool,
    ) -> Result<(Option<Vec<Vec<f64>>>, Vec<Vec<f64>>)>;

    /// Fingerprint of the metric's learned parameters (0 if it has none).
    fn param_checksum(&self) -> u64 {
        0
    }
}

/// Runs the encoder with caches and returns embeddings plus a closure-free
/// backward helper.
/// Positions of one equal-length group and its encoder cache.
type EncodedGroup = (Vec<usize>, crate::nn::ForwardCache<f32>);

fn encode_with_grad(model: &crate::nn::SiameseModel<f32>, s: &[&[f32]]) -> Result<(Vec<Vec<f64>>, Vec<EncodedGroup>)> {
    let h = model.hidden;
    let mut z = vec![Vec::new(); s.len()];
    let mut caches = Vec::new();
    let idx: Vec<usize> = (0..s.len()).collect();
    for chunk in idx.chunks(INFER_BATCH) {
        let batch: Vec<&[f32]> = chunk.iter().map(|&i| s[i]).collect();
        let (out, cache) = model
            .encoder
            .forward(&model.params, stack_signals(&batch)?, Mode::Infer, None)?;
        for (row, &i) in out.as_slice().unwrap().chunks_exact(h).zip(chunk) {
            z[i] = row.iter().map(|v| *v as f64).collect();
        }
        caches.push((chunk.to_vec(), cache));
    }
    Ok((z, caches))
}

fn encoder_input_grad(
    model: &crate::nn::SiameseModel<f32>,
    caches: &[(Vec<usize>, crate::nn::ForwardCache<f32>)],
    dz: &[Vec<f64>],
    lens: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let h = model.hidden;
    let mut out = vec![Vec::new(); dz.len()];
    let mut sink = Gradients::zeros_like(&model.params);
    for (chunk, cache) in caches {
        let mut dy = Array3::<f32>::zeros((chunk.len(), h, 1));
        for (row, &i) in chunk.iter().enumerate() {
            for t in 0..h {
                dy[[row, t, 0]] = dz[i][t] as f32;
            }
        }
        let dx = model
            .encoder
            .backward(&model.params, cache, &dy, &mut sink, true)?
            .expect("input gradient requested");
        for (row, &i) in chunk.iter().enumerate() {
            out[i] = dx.as_slice().unwrap()[row * lens[i]..][..lens[i]].iter().map(|v| *v as f64).collect();
        }
    }
    Ok(out)
}

fn check_weights(a: usize, b: usize, w: &Array2<f64>) -> Result<()> {
    if w.dim() != (a, b) {
        return Err(Error::InvalidInput(format!("weights {:?} do not match {a} x {b} pairs", w.dim())));
    }
    Ok(())
}

impl DifferentiableMetric for MetricHandle {
    fn cross_grad(
        &self,
        a: &[&[f32]],
        b: &[&[f32]],
        weights: &Array2<f64>,
        with_a: bool,
    ) -> Result<(Option<Vec<Vec<f64>>>, Vec<Vec<f64>>)> {
        check_weights(a.len(), b.len(), weights)?;
        match &self.kind {
            MetricKind::ModelSiamese(m) => {
                let (za, ca) = encode_with_grad(m, a)?;
                let (zb, cb) = encode_with_grad(m, b)?;
                let h = m.hidden;
                let mut dza = vec![vec![0.0; h]; a.len()];
                let mut dzb = vec![vec![0.0; h]; b.len()];
                for i in 0..a.len() {
                    for j in 0..b.len() {
                        let w = weights[[i, j]];
                        let d = euclidean(&za[i], &zb[j]);
                        // No gradient through a zero distance.
                        if w == 0.0 || d == 0.0 {
                            continue;
                        }
                        for t in 0..h {
                            let g = w * (za[i][t] - zb[j][t]) / d;
                            dza[i][t] += g;
                            dzb[j][t] -= g;
                        }
                    }
                }
                let lens_a: Vec<usize> = a.iter().map(|s| s.len()).collect();
                let lens_b: Vec<usize> = b.iter().map(|s| s.len()).collect();
                let ga = if with_a {
                    Some(encoder_input_grad(m, &ca, &dza, &lens_a)?)
                } else {
                    None
                };
                Ok((ga, encoder_input_grad(m, &cb, &dzb, &lens_b)?))
            }
            MetricKind::ModelDirect(m) => {
                let mut ga = vec![Vec::new(); a.len()];
                let mut gb = vec![Vec::new(); b.len()];
                for (i, s) in a.iter().enumerate() {
                    ga[i] = vec![0.0; s.len()];
                }
                for (j, s) in b.iter().enumerate() {
                    gb[j] = vec![0.0; s.len()];
                }
                let orders: &[bool] = if m.symmetrize { &[false, true] } else { &[false] };
                let scale = 1.0 / orders.len() as f64;
                let all: Vec<(usize, usize)> = (0..a.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).collect();
                let mut sink = Gradients::zeros_like(&m.params);
                for &swapped in orders {
                    for chunk in all.chunks(INFER_BATCH) {
                        let pairs: Vec<(&[f32], &[f32])> = chunk
                            .iter()
                            .map(|&(i, j)| if swapped { (b[j], a[i]) } else { (a[i], b[j]) })
                            .collect();
                        let len = pairs.iter().map(|(x, y)| x.len().max(y.len())).max().unwrap_or(0);
                        let (_, cache) = m.net.forward(&m.params, concat_pairs(&pairs, len), Mode::Infer, None)?;
                        let dy = Array3::from_shape_fn((chunk.len(), 1, 1), |(k, _, _)| {
                            (scale * weights[[chunk[k].0, chunk[k].1]]) as f32
                        });
                        let dx = m
                            .net
                            .backward(&m.params, &cache, &dy, &mut sink, true)?
                            .expect("input gradient requested");
                        for (k, &(i, j)) in chunk.iter().enumerate() {
                            let (ca, cb) = if swapped { (1, 0) } else { (0, 1) };
                            for (t, g) in ga[i].iter_mut().enumerate() {
                                *g += dx[[k, ca, t]] as f64;
                            }
                            for (t, g) in gb[j].iter_mut().enumerate() {
                                *g += dx[[k, cb, t]] as f64;
                            }
                        }
                    }
                }
                Ok((with_a.then_some(ga), gb))
            }
            MetricKind::SoftDtw { config, normalize } => {
                let nb = b.len();
                let both = try_map_range(a.len() * nb, Exec::Auto, |k| {
                    let (i, j) = (k / nb, k % nb);
                    let w = weights[[i, j]];
                    let norm = if *normalize { a[i].len().max(b[j].len()) as f64 } else { 1.0 };
                    let gx = if with_a { soft_dtw_grad(a[i], b[j], config)?.grad_x } else { Vec::new() };
                    let gy = soft_dtw_grad(b[j], a[i], config)?.grad_x;
                    let f = |g: Vec<f64>| g.into_iter().map(|v| w * v / norm).collect::<Vec<f64>>();
                    Ok::<_, Error>((f(gx), f(gy)))
                })?;
                let mut ga: Vec<Vec<f64>> = a.iter().map(|s| vec![0.0; s.len()]).collect();
                let mut gb: Vec<Vec<f64>> = b.iter().map(|s| vec![0.0; s.len()]).collect();
                for (k, (gx, gy)) in both.into_iter().enumerate() {
                    let (i, j) = (k / nb, k % nb);
                    ga[i].iter_mut().zip(gx).for_each(|(d, v)| *d += v);
                    gb[j].iter_mut().zip(gy).for_each(|(d, v)| *d += v);
                }
                Ok((with_a.then_some(ga), gb))
            }
            _ => Err(Error::InvalidInput(format!("metric `{}` is not differentiable", self.name))),
        }
    }

    fn param_checksum(&self) -> u64 {
        match &self.kind {
            MetricKind::ModelSiamese(m) => m.params.checksum(),
            MetricKind::ModelDirect(m) => m.params.checksum(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSet {
    /// Class id of each prototype, ascending.
    pub classes: Vec<u32>,
    pub prototypes: Vec<TimeSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrototypeConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Weight of the mean pairwise prototype distance, which is subtracted
    /// from the loss to push prototypes apart.
    pub beta: f64,
    pub batch_size: usize,
    /// Class members averaged to initialize each prototype.
    pub init_members: usize,
    pub seed: u64,
    /// Return the prototypes of the epoch with the highest validation
    /// accuracy instead of the last epoch's.
    pub keep_best: bool,
}

impl Default for PrototypeConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            lr: 3e-3,
            beta: 0.1,
            batch_size: 32,
            init_members: 10,
            seed: 0,
            keep_best: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeReport {
    pub metric: String,
    /// Prototypes of `best_epoch`, or of the last epoch without `keep_best`.
    pub set: PrototypeSet,
    /// Validation accuracy after each epoch; entry 0 is the initialization.
    pub accuracy: Vec<f64>,
    /// First epoch reaching the highest validation accuracy (0 when training
    /// never beat the initialization).
    pub best_epoch: usize,
    /// Mean training loss of each epoch (entry 0 is the loss at
    /// initialization).
    pub loss: Vec<f64>,
    pub checksum_before: u64,
    pub checksum_after: u64,
}

/// Nearest prototype under `metric`; ties go to the lower class id.
pub fn classify_by_prototype(set: &PrototypeSet, metric: &dyn PairMetric, x: &[f32]) -> Result<u32> {
    let protos: Vec<&[f32]> = set.prototypes.iter().map(|p| p.values()).collect();
    Ok(classify_many(set, metric, &[x], Exec::Sequential)?[0])
        .and_then(|c| if protos.is_empty() { Err(Error::InvalidInput("no prototypes".into())) } else { Ok(c) })
}

fn classify_many(set: &PrototypeSet, metric: &dyn PairMetric, xs: &[&[f32]], exec: Exec) -> Result<Vec<u32>> {
    if set.prototypes.is_empty() {
        return Err(Error::InvalidInput("no prototypes".into()));
    }
    let protos: Vec<&[f32]> = set.prototypes.iter().map(|p| p.values()).collect();
    let d = metric.cross_matrix(xs, &protos, exec)?;
    Ok(d.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] < row[best] {
                    best = k;
                }
            }
            set.classes[best]
        })
        .collect())
}

pub fn prototype_accuracy(set: &PrototypeSet, metric: &dyn PairMetric, signals: &[TimeSeries]) -> Result<f64> {
    let xs: Vec<&[f32]> = signals.iter().map(|s| s.values()).collect();
    let pred = classify_many(set, metric, &xs, Exec::Auto)?;
    let correct = pred.iter().zip(signals).filter(|(p, s)| s.label == Some(**p)).count();
    Ok(correct as f64 / signals.len().max(1) as f64)
}

/// Element-wise mean of up to `members` random signals per class.
pub fn init_prototypes(signals: &[TimeSeries], members: usize, seed: u64) -> Result<PrototypeSet> {
    let mut by_class: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, s) in signals.iter().enumerate() {
        let label = s
            .label
            .ok_or_else(|| Error::InvalidInput(format!("signal `{}` has no label", s.id)))?;
        by_class.entry(label).or_default().push(i);
    }
    let len = signals.first().map_or(0, |s| s.len());
    if len == 0 || signals.iter().any(|s| s.len() != len) {
        return Err(Error::InvalidInput("prototype learning needs signals of one common length".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut classes = Vec::new();
    let mut prototypes = Vec::new();
    for (class, idx) in by_class {
        let chosen: Vec<usize> = if idx.len() > members {
            rand::seq::index::sample(&mut rng, idx.len(), members)
                .into_iter()
                .map(|k| idx[k])
                .collect()
        } else {
            idx
        };
        let mut mean = vec![0.0f64; len];
        for &i in &chosen {
            mean.iter_mut().zip(signals[i].values()).for_each(|(m, v)| *m += *v as f64);
        }
        let values = mean.into_iter().map(|m| (m / chosen.len() as f64) as f32).collect();
        classes.push(class);
        prototypes.push(TimeSeries::new(format!("prototype_{class}"), values)?.with_label(class));
    }
    Ok(PrototypeSet { classes, prototypes })
}

/// Batch loss and prototype gradients: cross-entropy of the softmax over
/// negative distances to each prototype, minus `beta` times the mean
/// pairwise prototype distance.
fn loss_and_grad(
    metric: &dyn DifferentiableMetric,
    batch: &[&[f32]],
    targets: &[usize],
    protos: &[&[f32]],
    beta: f64,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = batch.len() as f64;
    let k = protos.len();
    let d = metric.cross_matrix(batch, protos, Exec::Auto)?;
    let mut w = Array2::<f64>::zeros(d.dim());
    let mut loss = 0.0;
    for (i, &y) in targets.iter().enumerate() {
        let row = d.row(i);
        let m = row.iter().fold(f64::INFINITY, |a, &v| a.min(v));
        let z: f64 = row.iter().map(|&v| (m - v).exp()).sum();
        loss += row[y] - m + z.ln();
        for c in 0..k {
            let p = (m - row[c]).exp() / z;
            w[[i, c]] = ((c == y) as u8 as f64 - p) / n;
        }
    }
    loss /= n;
    let (_, mut grads) = metric.cross_grad(batch, protos, &w, false)?;
    if k > 1 && beta != 0.0 {
        let n_pairs = (k * (k - 1) / 2) as f64;
        let dp = metric.cross_matrix(protos, protos, Exec::Auto)?;
        let mut wp = Array2::<f64>::zeros((k, k));
        for a in 0..k {
            for b in a + 1..k {
                loss -= beta * dp[[a, b]] / n_pairs;
                wp[[a, b]] = -beta / n_pairs;
            }
        }
        let (ga, gb) = metric.cross_grad(protos, protos, &wp, true)?;
        for (g, (x, y)) in grads.iter_mut().zip(ga.expect("requested").iter().zip(&gb)) {
            g.iter_mut().zip(x.iter().zip(y)).for_each(|(d, (u, v))| *d += u + v);
        }
    }
    Ok((loss, grads))
}

/// Learns one prototype per class by gradient descent through `metric`,
/// whose own parameters stay untouched.
pub fn train_prototypes(
    metric: &dyn DifferentiableMetric,
    train: &[TimeSeries],
    val: &[TimeSeries],
    cfg: &PrototypeConfig,
) -> Result<PrototypeReport> {
    if cfg.batch_size == 0 || cfg.init_members == 0 {
        return Err(Error::InvalidInput("batch_size and init_members must be positive".into()));
    }
    let checksum_before = metric.param_checksum();
    let mut set = init_prototypes(train, cfg.init_members, cfg.seed)?;
    let k = set.classes.len();
    let len = set.prototypes[0].len();
    let class_pos = |c: u32| set.classes.iter().position(|&x| x == c);
    let targets: Vec<usize> = train
        .iter()
        .map(|s| class_pos(s.label.expect("checked by init")).expect("class seen at init"))
        .collect();

    let flat: Vec<f32> = set.prototypes.iter().flat_map(|p| p.values().iter().copied()).collect();
    let mut store = ParamStore::<f32>::new();
    store.insert(ParamArray::new("prototypes", vec![k, len], flat, true)?)?;
    let mut adam = AdamState::new(AdamConfig::with_lr(cfg.lr), &store)?;

    let refresh = |set: &mut PrototypeSet, store: &ParamStore<f32>| -> Result<()> {
        for (p, row) in set.prototypes.iter_mut().zip(store.arrays()[0].values.chunks_exact(len)) {
            p.values_mut().copy_from_slice(row);
        }
        Ok(())
    };

    let xs: Vec<&[f32]> = train.iter().map(|s| s.values()).collect();
    let mut accuracy = vec![prototype_accuracy(&set, metric, val)?];
    let protos0: Vec<&[f32]> = set.prototypes.iter().map(|p| p.values()).collect();
    let mut loss = vec![loss_and_grad(metric, &xs, &targets, &protos0, cfg.beta)?.0];
    log::info!("prototypes epoch 0: accuracy {:.4}", accuracy[0]);
    let mut best = (0, set.clone());

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng_from_seed(cfg.seed.wrapping_add(epoch as u64)));
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&[f32]> = chunk.iter().map(|&i| xs[i]).collect();
            let tg: Vec<usize> = chunk.iter().map(|&i| targets[i]).collect();
            let protos: Vec<Vec<f32>> = store.arrays()[0].values.chunks_exact(len).map(|r| r.to_vec()).collect();
            let prefs: Vec<&[f32]> = protos.iter().map(|p| p.as_slice()).collect();
            let (l, grads) = loss_and_grad(metric, &batch, &tg, &prefs, cfg.beta)?;
            if !l.is_finite() {
                return Err(Error::NonFinite(format!("prototype loss at epoch {epoch}")));
            }
            epoch_loss += l * chunk.len() as f64;
            let mut g = Gradients::zeros_like(&store);
            g.values[0] = grads.into_iter().flatten().map(|v| v as f32).collect();
            adam.step(&mut store, &g)?;
        }
        refresh(&mut set, &store)?;
        accuracy.push(prototype_accuracy(&set, metric, val)?);
        loss.push(epoch_loss / train.len() as f64);
        log::info!("prototypes epoch {epoch}: loss {:.5} accuracy {:.4}", loss[epoch], accuracy[epoch]);
        if accuracy[epoch] > accuracy[best.0] {
            best = (epoch, set.clone());
        }
    }
    let (best_epoch, set) = if cfg.keep_best { best } else { (best.0, set) };
    Ok(PrototypeReport {
        metric: metric.name().to_string(),
        set,
        accuracy,
        best_epoch,
        loss,
        checksum_before,
        checksum_after: metric.param_checksum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{DirectModel, SiameseModel};

    fn series(n: usize, len: usize, seed: u64) -> Vec<Vec<f32>> {
        use rand::Rng;
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| (0..len).map(|_| rng.random::<f32>()).collect()).collect()
    }

    /// Finite-difference check of `cross_grad` on one coordinate per series.
    fn fd_check(m: &MetricHandle, len: usize) {
        let a = series(2, len, 1);
        let b = series(3, len, 2);
        let w = Array2::from_shape_fn((2, 3), |(i, j)| 0.3 + 0.2 * i as f64 - 0.1 * j as f64);
        let objective = |a: &[Vec<f32>], b: &[Vec<f32>]| {
            let ar: Vec<&[f32]> = a.iter().map(|v| v.as_slice()).collect();
            let br: Vec<&[f32]> = b.iter().map(|v| v.as_slice()).collect();
            let d = m.cross_matrix(&ar, &br, Exec::Sequential).unwrap();
            (&d * &w).sum()
        };
        let ar: Vec<&[f32]> = a.iter().map(|v| v.as_slice()).collect();
        let br: Vec<&[f32]> = b.iter().map(|v| v.as_slice()).collect();
        let (ga, gb) = m.cross_grad(&ar, &br, &w, true).unwrap();
        let ga = ga.unwrap();
        let h = 1e-2f32;
        for (which, t) in [(0usize, 3usize), (1, len / 2), (2, len - 1)] {
            let mut bp = b.clone();
            bp[which][t] += h;
            let up = objective(&a, &bp);
            bp[which][t] -= 2.0 * h;
            let down = objective(&a, &bp);
            let fd = (up - down) / (2.0 * h as f64);
            assert!((fd - gb[which][t]).abs() <= 0.05 * fd.abs().max(1e-3), "{} b: fd {fd} vs {}", m.name, gb[which][t]);
        }
        let mut ap = a.clone();
        ap[1][5] += h;
        let up = objective(&ap, &b);
        ap[1][5] -= 2.0 * h;
        let down = objective(&ap, &b);
        let fd = (up - down) / (2.0 * h as f64);
        assert!((fd - ga[1][5]).abs() <= 0.05 * fd.abs().max(1e-3), "{} a: fd {fd} vs {}", m.name, ga[1][5]);
    }

    #[test]
    fn cross_grad_matches_finite_differences() {
        fd_check(&MetricHandle::siamese(SiameseModel::new(8, 3).unwrap()), 256);
        fd_check(&MetricHandle::direct(DirectModel::new(8, 3).unwrap()), 256);
        // Squared cost keeps the objective smooth for finite differences.
        let soft = MetricSpec::SoftDtw {
            gamma: 0.1,
            cost: crate::metrics::CostKind::Squared,
            normalize: true,
        };
        fd_check(&MetricHandle::from_spec(&soft).unwrap(), 16);
        assert!(MetricHandle::exact_dtw()
            .cross_grad(&[&[0.0]], &[&[1.0]], &Array2::ones((1, 1)), false)
            .is_err());
    }

    #[test]
    fn prototype_classification() {
        let p = |c: u32, v: Vec<f32>| TimeSeries::new(format!("p{c}"), v).unwrap().with_label(c);
        let set = PrototypeSet {
            classes: vec![0, 1],
            prototypes: vec![p(0, vec![0.0; 300]), p(1, vec![1.0; 300])],
        };
        let m = MetricHandle::siamese(SiameseModel::new(8, 0).unwrap());
        assert_eq!(classify_by_prototype(&set, &m, &[1.0; 300]).unwrap(), 1);
        assert_eq!(classify_by_prototype(&set, &m, &[0.0; 300]).unwrap(), 0);
        let one = PrototypeSet {
            classes: vec![4],
            prototypes: vec![p(4, vec![0.5; 300])],
        };
        assert_eq!(classify_by_prototype(&one, &m, &[0.9; 300]).unwrap(), 4);
    }

    #[test]
    fn training_keeps_best_epoch_and_model() {
        let labelled = |seed: u64| -> Vec<TimeSeries> {
            series(12, 8, seed)
                .into_iter()
                .enumerate()
                .map(|(i, mut v)| {
                    let c = (i % 2) as u32;
                    v.iter_mut().for_each(|x| *x = *x * 0.2 + c as f32 * 0.8);
                    TimeSeries::new(format!("s{i}"), v).unwrap().with_label(c)
                })
                .collect()
        };
        let (train, val) = (labelled(1), labelled(2));
        let m = MetricHandle::soft_dtw(0.1).unwrap();
        for keep_best in [true, false] {
            let cfg = PrototypeConfig {
                epochs: 4,
                batch_size: 4,
                keep_best,
                ..PrototypeConfig::default()
            };
            let r = train_prototypes(&m as &dyn DifferentiableMetric, &train, &val, &cfg).unwrap();
            assert_eq!(r.accuracy.len(), 5);
            assert_eq!(r.loss.len(), 5);
            let best = r.accuracy.iter().cloned().fold(f64::MIN, f64::max);
            assert_eq!(r.accuracy[r.best_epoch], best);
            assert!(r.accuracy[..r.best_epoch].iter().all(|&a| a < best));
            let returned = prototype_accuracy(&r.set, &m, &val).unwrap();
            let expected = if keep_best { best } else { *r.accuracy.last().unwrap() };
            assert_eq!(returned, expected);
        }
    }

    #[test]
    fn zero_epochs_report_initialization() {
        let s: Vec<TimeSeries> = (0..4)
            .map(|i| TimeSeries::new(format!("s{i}"), vec![i as f32; 5]).unwrap().with_label(i % 2))
            .collect();
        let m = MetricHandle::soft_dtw(0.5).unwrap();
        let cfg = PrototypeConfig {
            epochs: 0,
            ..PrototypeConfig::default()
        };
        let r = train_prototypes(&m as &dyn DifferentiableMetric, &s, &s, &cfg).unwrap();
        assert_eq!(r.accuracy.len(), 1);
        assert_eq!(r.best_epoch, 0);
        assert_eq!(r.set, init_prototypes(&s, cfg.init_members, cfg.seed).unwrap());
    }
}
