use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::data::Rng;
use crate::error::{Error, Result};
use crate::nn::layers::{self, BatchStats, ConvGeom, LayerSpec};
use crate::nn::params::{Gradients, ParamStore};
use crate::nn::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Batch statistics in normalization layers.
    Train,
    /// Running statistics in normalization layers.
    Infer,
}

/// Architecture of a sequential network. Parameters live separately in a
/// [`ParamStore`], named `{name}.{layer}.{suffix}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub in_channels: usize,
    /// Inclusive range of accepted input lengths, if restricted.
    pub input_len: Option<(usize, usize)>,
    pub layers: Vec<LayerSpec>,
}

enum LayerCache<T> {
    Conv { x: Array3<T>, geom: ConvGeom },
    BatchNorm { x_hat: Array3<T>, inv_std: Vec<T> },
    Relu { y: Array3<T> },
    Pool { arg: Vec<usize>, len: usize },
    Dense { x: Array3<T> },
    Upsample { len: usize },
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardCache<T> {
    generation: u64,
    mode: Mode,
    layers: Vec<LayerCache<T>>,
    batch_stats: Vec<(usize, BatchStats)>,
}

impl<T> ForwardCache<T> {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }
}

impl NetworkSpec {
    pub fn param_name(&self, layer: usize, suffix: &str) -> String {
        format!("{}.{layer}.{suffix}", self.name)
    }

    /// Adds this network's parameters to `store` with their initial values.
    pub fn init_params<T: Real>(&self, store: &mut ParamStore<T>, rng: &mut Rng) -> Result<()> {
        for (idx, layer) in self.layers.iter().enumerate() {
            for (suffix, shape, trainable, init) in layer.param_layout() {
                let name = self.param_name(idx, suffix);
                if trainable && matches!(layer, LayerSpec::Conv1d { .. } | LayerSpec::Dense { .. }) {
                    store.insert_uniform(name, shape, init, rng)?;
                } else {
                    store.insert_const(name, shape, init, trainable)?;
                }
            }
        }
        Ok(())
    }

    pub fn new_params<T: Real>(&self, rng: &mut Rng) -> Result<ParamStore<T>> {
        let mut store = ParamStore::new();
        self.init_params(&mut store, rng)?;
        Ok(store)
    }

    pub fn check_input_len(&self, len: usize) -> Result<()> {
        match self.input_len {
            Some((min, max)) if len < min || len > max => Err(Error::Inadmissible { len, min, max }),
            _ => Ok(()),
        }
    }

    /// `(channels, length)` of the output for an input of length `len`.
    pub fn output_shape(&self, len: usize, target: Option<usize>) -> Result<(usize, usize)> {
        self.check_input_len(len)?;
        let (mut ch, mut l) = (self.in_channels, len);
        for (idx, layer) in self.layers.iter().enumerate() {
            (ch, l) = layer.output_shape(ch, l, target).map_err(|message| self.shape_err(idx, message))?;
        }
        Ok((ch, l))
    }

    fn shape_err(&self, idx: usize, message: String) -> Error {
        Error::Shape {
            layer: idx,
            kind: self.layers[idx].kind().to_string(),
            message: format!("{}: {message}", self.name),
        }
    }

    fn slots<T: Real>(&self, store: &ParamStore<T>, idx: usize) -> Result<Vec<usize>> {
        self.layers[idx]
            .param_layout()
            .iter()
            .map(|(suffix, ..)| store.position(&self.param_name(idx, suffix)))
            .collect()
    }

    /// Forward pass keeping the caches needed by [`NetworkSpec::backward`].
    /// `target` is the output length for upsampling layers without a fixed
    /// target.
    pub fn forward<T: Real>(
        &self,
        store: &ParamStore<T>,
        x: Array3<T>,
        mode: Mode,
        target: Option<usize>,
    ) -> Result<(Array3<T>, ForwardCache<T>)> {
        let mut cache = ForwardCache {
            generation: store.generation(),
            mode,
            layers: Vec::with_capacity(self.layers.len()),
            batch_stats: Vec::new(),
        };
        let y = self.run(store, x, mode, target, Some(&mut cache))?;
        Ok((y, cache))
    }

    /// Inference-mode forward pass without caches.
    pub fn infer<T: Real>(&self, store: &ParamStore<T>, x: Array3<T>, target: Option<usize>) -> Result<Array3<T>> {
        self.run(store, x, Mode::Infer, target, None)
    }

    fn run<T: Real>(
        &self,
        store: &ParamStore<T>,
        mut x: Array3<T>,
        mode: Mode,
        target: Option<usize>,
        mut cache: Option<&mut ForwardCache<T>>,
    ) -> Result<Array3<T>> {
        let (batch, ch, len) = x.dim();
        if batch == 0 {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        if ch != self.in_channels {
            return Err(self.shape_err(0, format!("expected {} input channels, got {ch}", self.in_channels)));
        }
        self.check_input_len(len)?;
        if !x.is_standard_layout() {
            x = x.as_standard_layout().into_owned();
        }
        let keep = cache.is_some();
        for (idx, layer) in self.layers.iter().enumerate() {
            let (_, ch, len) = x.dim();
            layer
                .output_shape(ch, len, target)
                .map_err(|message| self.shape_err(idx, message))?;
            let slots = self.slots(store, idx)?;
            let p = |k: usize| store.arrays()[slots[k]].values.as_slice();
            let (y, lc) = match *layer {
                LayerSpec::Conv1d { .. } => {
                    let geom = ConvGeom::new(layer, len).map_err(|m| self.shape_err(idx, m))?;
                    let y = layers::conv_forward(&x, p(0), p(1), &geom);
                    (y, keep.then(|| LayerCache::Conv { x, geom }))
                }
                LayerSpec::BatchNorm { eps, .. } => {
                    let out = layers::batchnorm_forward(&x, p(0), p(1), p(2), p(3), eps, mode);
                    if let (Some(c), Some(stats)) = (cache.as_deref_mut(), out.stats) {
                        c.batch_stats.push((idx, stats));
                    }
                    let lc = LayerCache::BatchNorm {
                        x_hat: out.x_hat,
                        inv_std: out.inv_std,
                    };
                    (out.y, keep.then_some(lc))
                }
                LayerSpec::Relu => {
                    let y = layers::relu_forward(x);
                    let lc = keep.then(|| LayerCache::Relu { y: y.clone() });
                    (y, lc)
                }
                LayerSpec::GlobalMaxPool => {
                    let (y, arg) = layers::maxpool_forward(&x);
                    (y, keep.then_some(LayerCache::Pool { arg, len }))
                }
                LayerSpec::Dense { inputs, outputs } => {
                    let y = layers::dense_forward(&x, p(0), p(1), inputs, outputs);
                    (y, keep.then(|| LayerCache::Dense { x }))
                }
                LayerSpec::UpsampleNearest { target: fixed } => {
                    let lout = fixed.or(target).expect("checked by output_shape");
                    let y = layers::upsample_forward(&x, lout);
                    (y, keep.then_some(LayerCache::Upsample { len }))
                }
            };
            if let (Some(c), Some(lc)) = (cache.as_deref_mut(), lc) {
                c.layers.push(lc);
            }
            x = y;
        }
        Ok(x)
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the network input when `need_input_grad` is set.
    pub fn backward<T: Real>(
        &self,
        store: &ParamStore<T>,
        cache: &ForwardCache<T>,
        dy: &Array3<T>,
        grads: &mut Gradients<T>,
        need_input_grad: bool,
    ) -> Result<Option<Array3<T>>> {
        if cache.generation != store.generation() {
            return Err(Error::StaleCache {
                cached: cache.generation,
                current: store.generation(),
            });
        }
        if cache.layers.len() != self.layers.len() {
            return Err(Error::InvalidInput("cache does not belong to this network".into()));
        }
        let mut dy = if dy.is_standard_layout() {
            dy.clone()
        } else {
            dy.as_standard_layout().into_owned()
        };
        for idx in (0..self.layers.len()).rev() {
            let slots = self.slots(store, idx)?;
            let p = |k: usize| store.arrays()[slots[k]].values.as_slice();
            let need = need_input_grad || idx > 0;
            let dx = match (&self.layers[idx], &cache.layers[idx]) {
                (LayerSpec::Conv1d { .. }, LayerCache::Conv { x, geom }) => {
                    let (dw, db, dx) = layers::conv_backward(x, &dy, p(0), geom, need);
                    grads.accumulate(slots[0], &dw);
                    grads.accumulate(slots[1], &db);
                    dx
                }
                (LayerSpec::BatchNorm { .. }, LayerCache::BatchNorm { x_hat, inv_std }) => {
                    let (dg, db, dx) = layers::batchnorm_backward(&dy, x_hat, inv_std, p(0), cache.mode);
                    grads.accumulate(slots[0], &dg);
                    grads.accumulate(slots[1], &db);
                    Some(dx)
                }
                (LayerSpec::Relu, LayerCache::Relu { y }) => Some(layers::relu_backward(&dy, y)),
                (LayerSpec::GlobalMaxPool, LayerCache::Pool { arg, len }) => {
                    Some(layers::maxpool_backward(&dy, arg, *len))
                }
                (LayerSpec::Dense { inputs, outputs }, LayerCache::Dense { x }) => {
                    let (dw, db, dx) = layers::dense_backward(x, &dy, p(0), *inputs, *outputs, need);
                    grads.accumulate(slots[0], &dw);
                    grads.accumulate(slots[1], &db);
                    dx
                }
                (LayerSpec::UpsampleNearest { .. }, LayerCache::Upsample { len }) => {
                    Some(layers::upsample_backward(&dy, *len))
                }
                _ => return Err(Error::InvalidInput("cache does not belong to this network".into())),
            };
            match dx {
                Some(dx) => dy = dx,
                None => return Ok(None),
            }
        }
        Ok(need_input_grad.then_some(dy))
    }

    /// Folds the batch statistics of a train-mode pass into the running
    /// estimates of every normalization layer.
    pub fn commit_running_stats<T: Real>(&self, store: &mut ParamStore<T>, cache: &ForwardCache<T>) -> Result<()> {
        for (idx, stats) in &cache.batch_stats {
            let LayerSpec::BatchNorm { momentum, .. } = self.layers[*idx] else {
                return Err(Error::InvalidInput("cache does not belong to this network".into()));
            };
            for (suffix, batch) in [("running_mean", &stats.mean), ("running_var", &stats.var)] {
                let values = store.values_mut(&self.param_name(*idx, suffix))?;
                for (r, b) in values.iter_mut().zip(batch) {
                    *r = T::of((1.0 - momentum) * r.f64() + momentum * b);
                }
            }
        }
        Ok(())
    }
}
