use std::collections::BTreeMap;

use ndarray::{Array2, Array3};

use crate::data::rng_from_seed;
use crate::error::{Error, Result};
use crate::nn::arch::{build_decoder, build_direct, build_encoder};
use crate::nn::network::NetworkSpec;
use crate::nn::params::ParamStore;
use crate::nn::Real;

/// Largest batch used for inference.
pub const INFER_BATCH: usize = 64;

/// Stacks equal-length series into `[batch, 1, length]`.
pub fn stack_signals<T: Real>(signals: &[&[T]]) -> Result<Array3<T>> {
    let len = signals.first().map(|s| s.len()).unwrap_or(0);
    if len == 0 || signals.iter().any(|s| s.len() != len) {
        return Err(Error::InvalidInput("signals must be non-empty and of equal length".into()));
    }
    let flat: Vec<T> = signals.iter().flat_map(|s| s.iter().copied()).collect();
    Ok(Array3::from_shape_vec((signals.len(), 1, len), flat).expect("consistent shape"))
}

/// Stacks one pair as two channels, zero-padding the shorter series on the
/// right to the longer length.
pub fn concat_pair<T: Real>(x: &[T], y: &[T]) -> Array3<T> {
    concat_pairs(&[(x, y)], x.len().max(y.len()))
}

/// `[batch, 2, len]` with every series zero-padded to `len`.
pub fn concat_pairs<T: Real>(pairs: &[(&[T], &[T])], len: usize) -> Array3<T> {
    let mut out = Array3::<T>::zeros((pairs.len(), 2, len));
    for (b, (x, y)) in pairs.iter().enumerate() {
        for (c, s) in [x, y].into_iter().enumerate() {
            let n = s.len().min(len);
            out.slice_mut(ndarray::s![b, c, ..n])
                .iter_mut()
                .zip(s.iter())
                .for_each(|(d, v)| *d = *v);
        }
    }
    out
}

pub fn euclidean<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x.f64() - y.f64();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Groups indices by key so that each group can be batched.
fn group_by_len(lens: impl Iterator<Item = usize>) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, len) in lens.enumerate() {
        groups.entry(len).or_default().push(i);
    }
    groups
}

/// Encoder and decoder sharing one parameter store. Distances are Euclidean
/// norms between embeddings.
#[derive(Debug, Clone)]
pub struct SiameseModel<T = f32> {
    pub hidden: usize,
    pub encoder: NetworkSpec,
    pub decoder: NetworkSpec,
    pub params: ParamStore<T>,
}

impl<T: Real> SiameseModel<T> {
    pub fn new(hidden: usize, seed: u64) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidInput("embedding size must be positive".into()));
        }
        let encoder = build_encoder("encoder", hidden);
        let decoder = build_decoder("decoder", hidden);
        let mut rng = rng_from_seed(seed);
        let mut params = ParamStore::new();
        encoder.init_params(&mut params, &mut rng)?;
        decoder.init_params(&mut params, &mut rng)?;
        Ok(Self {
            hidden,
            encoder,
            decoder,
            params,
        })
    }

    /// `[batch, hidden]` embeddings of a `[batch, 1, length]` input.
    pub fn embed_batch(&self, x: Array3<T>) -> Result<Array2<T>> {
        let b = x.dim().0;
        let z = self.encoder.infer(&self.params, x, None)?;
        Ok(z.into_shape_with_order((b, self.hidden)).expect("encoder output"))
    }

    /// One embedding per series, batched by length.
    pub fn embed(&self, signals: &[&[T]]) -> Result<Vec<Vec<T>>> {
        let mut out = vec![Vec::new(); signals.len()];
        for (_, idx) in group_by_len(signals.iter().map(|s| s.len())) {
            for chunk in idx.chunks(INFER_BATCH) {
                let batch: Vec<&[T]> = chunk.iter().map(|&i| signals[i]).collect();
                let z = self.embed_batch(stack_signals(&batch)?)?;
                for (row, &i) in z.rows().into_iter().zip(chunk) {
                    out[i] = row.to_vec();
                }
            }
        }
        Ok(out)
    }

    pub fn distance(&self, x: &[T], y: &[T]) -> Result<f64> {
        let zx = self.embed(&[x])?;
        let zy = self.embed(&[y])?;
        Ok(euclidean(&zx[0], &zy[0]))
    }

    pub fn reconstruct(&self, x: &[T]) -> Result<Vec<T>> {
        let z = self.embed(&[x])?;
        let z = Array3::from_shape_vec((1, 1, self.hidden), z[0].clone()).expect("embedding shape");
        let y = self.decoder.infer(&self.params, z, Some(x.len()))?;
        Ok(y.into_raw_vec_and_offset().0)
    }
}

/// Regressor over two-channel stacked pairs.
#[derive(Debug, Clone)]
pub struct DirectModel<T = f32> {
    pub hidden: usize,
    pub net: NetworkSpec,
    pub params: ParamStore<T>,
    /// Average the prediction over both channel orders.
    pub symmetrize: bool,
}

impl<T: Real> DirectModel<T> {
    pub fn new(hidden: usize, seed: u64) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidInput("hidden size must be positive".into()));
        }
        let net = build_direct("direct", hidden);
        let params = net.new_params(&mut rng_from_seed(seed))?;
        Ok(Self {
            hidden,
            net,
            params,
            symmetrize: false,
        })
    }

    pub fn forward_batch(&self, x: Array3<T>) -> Result<Vec<f64>> {
        let y = self.net.infer(&self.params, x, None)?;
        Ok(y.iter().map(|v| v.f64()).collect())
    }

    /// One prediction per pair. Each pair is padded to its own longer length.
    pub fn predict(&self, pairs: &[(&[T], &[T])]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; pairs.len()];
        for (len, idx) in group_by_len(pairs.iter().map(|(x, y)| x.len().max(y.len()))) {
            for chunk in idx.chunks(INFER_BATCH) {
                let batch: Vec<(&[T], &[T])> = chunk.iter().map(|&i| pairs[i]).collect();
                let mut pred = self.forward_batch(concat_pairs(&batch, len))?;
                if self.symmetrize {
                    let swapped: Vec<(&[T], &[T])> = batch.iter().map(|&(x, y)| (y, x)).collect();
                    let other = self.forward_batch(concat_pairs(&swapped, len))?;
                    pred.iter_mut().zip(other).for_each(|(a, b)| *a = 0.5 * (*a + b));
                }
                for (p, &i) in pred.into_iter().zip(chunk) {
                    out[i] = p;
                }
            }
        }
        Ok(out)
    }

    pub fn distance(&self, x: &[T], y: &[T]) -> Result<f64> {
        Ok(self.predict(&[(x, y)])?[0])
    }
}
