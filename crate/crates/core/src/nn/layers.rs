use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::nn::network::Mode;
use crate::nn::{Real, BATCH_CHUNK};
use crate::par::{map_chunks_mut, map_range, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// The same number of zeros on both sides.
    Fixed(usize),
    /// Output length equals input length (stride 1 only). The extra zero of
    /// an odd total goes on the right.
    Same,
}

/// One layer of a sequential network over `[batch, channels, length]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
        dilation: usize,
    },
    BatchNorm {
        channels: usize,
        eps: f64,
        momentum: f64,
    },
    Relu,
    /// Max over time; output length 1.
    GlobalMaxPool,
    /// Acts on `[batch, inputs, 1]`.
    Dense { inputs: usize, outputs: usize },
    /// Nearest-neighbour resampling to a fixed length, or to the length given
    /// at forward time when `target` is `None`.
    UpsampleNearest { target: Option<usize> },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::BatchNorm { .. } => "batchnorm",
            LayerSpec::Relu => "relu",
            LayerSpec::GlobalMaxPool => "global_max_pool",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::UpsampleNearest { .. } => "upsample_nearest",
        }
    }

    /// `(suffix, shape, trainable, init)` for each parameter; `init` is the
    /// uniform bound for trainable arrays or the constant for the others.
    pub(crate) fn param_layout(&self) -> Vec<(&'static str, Vec<usize>, bool, f64)> {
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => {
                let bound = 1.0 / ((in_channels * kernel) as f64).sqrt();
                vec![
                    ("weight", vec![out_channels, in_channels, kernel], true, bound),
                    ("bias", vec![out_channels], true, bound),
                ]
            }
            LayerSpec::BatchNorm { channels, .. } => vec![
                ("gamma", vec![channels], true, 1.0),
                ("beta", vec![channels], true, 0.0),
                ("running_mean", vec![channels], false, 0.0),
                ("running_var", vec![channels], false, 1.0),
            ],
            LayerSpec::Dense { inputs, outputs } => {
                let bound = 1.0 / (inputs as f64).sqrt();
                vec![
                    ("weight", vec![outputs, inputs], true, bound),
                    ("bias", vec![outputs], true, bound),
                ]
            }
            _ => Vec::new(),
        }
    }

    /// Output `(channels, length)` for an input `(channels, length)`.
    pub(crate) fn output_shape(&self, ch: usize, len: usize, target: Option<usize>) -> Result<(usize, usize), String> {
        match *self {
            LayerSpec::Conv1d { in_channels, .. } if ch != in_channels => {
                Err(format!("expected {in_channels} input channels, got {ch}"))
            }
            LayerSpec::Conv1d { .. } => {
                let g = ConvGeom::new(self, len)?;
                Ok((g.cout, g.lout))
            }
            LayerSpec::BatchNorm { channels, .. } if ch != channels => {
                Err(format!("expected {channels} channels, got {ch}"))
            }
            LayerSpec::BatchNorm { .. } | LayerSpec::Relu => Ok((ch, len)),
            LayerSpec::GlobalMaxPool => Ok((ch, 1)),
            LayerSpec::Dense { inputs, outputs } => {
                if ch != inputs || len != 1 {
                    Err(format!("expected [{inputs}, 1] input, got [{ch}, {len}]"))
                } else {
                    Ok((outputs, 1))
                }
            }
            LayerSpec::UpsampleNearest { target: fixed } => match fixed.or(target) {
                Some(t) if t > 0 => Ok((ch, t)),
                _ => Err("no target length".into()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeom {
    cin: usize,
    cout: usize,
    k: usize,
    stride: usize,
    dil: usize,
    pad_l: usize,
    lin: usize,
    lout: usize,
}

impl ConvGeom {
    pub(crate) fn new(spec: &LayerSpec, lin: usize) -> Result<Self, String> {
        let LayerSpec::Conv1d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            dilation,
        } = *spec
        else {
            unreachable!("not a convolution")
        };
        if kernel == 0 || stride == 0 || dilation == 0 {
            return Err("kernel, stride and dilation must be positive".into());
        }
        let span = dilation * (kernel - 1);
        let (pad_l, pad_r) = match padding {
            Padding::Fixed(p) => (p, p),
            Padding::Same if stride == 1 => (span / 2, span - span / 2),
            Padding::Same => return Err("same padding requires stride 1".into()),
        };
        let padded = lin + pad_l + pad_r;
        if padded <= span {
            return Err(format!("input length {lin} too short for kernel span {}", span + 1));
        }
        Ok(Self {
            cin: in_channels,
            cout: out_channels,
            k: kernel,
            stride,
            dil: dilation,
            pad_l,
            lin,
            lout: (padded - span - 1) / stride + 1,
        })
    }

    /// Output positions `t` whose tap at kernel offset `kk` reads inside the input.
    #[inline]
    fn valid(&self, kk: usize) -> (usize, usize, isize) {
        let off = (kk * self.dil) as isize - self.pad_l as isize;
        let s = self.stride as isize;
        let lo = if off >= 0 { 0 } else { ((-off) + s - 1) / s };
        let last = self.lin as isize - 1 - off;
        let hi = if last < 0 { 0 } else { (last / s + 1).min(self.lout as isize) };
        (lo as usize, (hi.max(lo)) as usize, off)
    }

    fn im2col<T: Real>(&self, x: &[T], nb: usize) -> Array2<T> {
        let ncols = nb * self.lout;
        let mut cols = Array2::<T>::zeros((self.cin * self.k, ncols));
        let cs = cols.as_slice_mut().expect("standard layout");
        for ci in 0..self.cin {
            for kk in 0..self.k {
                let (lo, hi, off) = self.valid(kk);
                let row = &mut cs[(ci * self.k + kk) * ncols..][..ncols];
                for b in 0..nb {
                    let src = &x[(b * self.cin + ci) * self.lin..][..self.lin];
                    let dst = &mut row[b * self.lout..][..self.lout];
                    for t in lo..hi {
                        dst[t] = src[(t as isize * self.stride as isize + off) as usize];
                    }
                }
            }
        }
        cols
    }

    fn col2im<T: Real>(&self, cols: &Array2<T>, nb: usize, dx: &mut [T]) {
        let ncols = nb * self.lout;
        let cs = cols.as_slice().expect("standard layout");
        for ci in 0..self.cin {
            for kk in 0..self.k {
                let (lo, hi, off) = self.valid(kk);
                let row = &cs[(ci * self.k + kk) * ncols..][..ncols];
                for b in 0..nb {
                    let dst = &mut dx[(b * self.cin + ci) * self.lin..][..self.lin];
                    let src = &row[b * self.lout..][..self.lout];
                    for t in lo..hi {
                        dst[(t as isize * self.stride as isize + off) as usize] += src[t];
                    }
                }
            }
        }
    }
}

pub(crate) fn conv_forward<T: Real>(x: &Array3<T>, weight: &[T], bias: &[T], g: &ConvGeom) -> Array3<T> {
    let batch = x.dim().0;
    let xs = x.as_slice().expect("standard layout");
    let w = ArrayView2::from_shape((g.cout, g.cin * g.k), weight).expect("weight shape");
    let mut y = Array3::<T>::zeros((batch, g.cout, g.lout));
    let per_sample = g.cout * g.lout;
    map_chunks_mut(y.as_slice_mut().unwrap(), BATCH_CHUNK * per_sample, Exec::Auto, |c, ychunk| {
        let b0 = c * BATCH_CHUNK;
        let nb = ychunk.len() / per_sample;
        let cols = g.im2col(&xs[b0 * g.cin * g.lin..(b0 + nb) * g.cin * g.lin], nb);
        let mut out = Array2::<T>::zeros((g.cout, nb * g.lout));
        general_mat_mul(T::one(), &w, &cols, T::zero(), &mut out);
        let os = out.as_slice().unwrap();
        for bl in 0..nb {
            for co in 0..g.cout {
                let src = &os[co * nb * g.lout + bl * g.lout..][..g.lout];
                let dst = &mut ychunk[(bl * g.cout + co) * g.lout..][..g.lout];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = *s + bias[co];
                }
            }
        }
    });
    y
}

/// Returns `(grad_weight, grad_bias, grad_input)`.
pub(crate) fn conv_backward<T: Real>(
    x: &Array3<T>,
    dy: &Array3<T>,
    weight: &[T],
    g: &ConvGeom,
    need_input_grad: bool,
) -> (Vec<T>, Vec<T>, Option<Array3<T>>) {
    let batch = x.dim().0;
    let xs = x.as_slice().expect("standard layout");
    let dys = dy.as_slice().expect("standard layout");
    let w = ArrayView2::from_shape((g.cout, g.cin * g.k), weight).expect("weight shape");

    let chunk_grads = |c: usize, dx: Option<&mut [T]>| -> (Array2<T>, Vec<T>) {
        let b0 = c * BATCH_CHUNK;
        let nb = BATCH_CHUNK.min(batch - b0);
        let cols = g.im2col(&xs[b0 * g.cin * g.lin..(b0 + nb) * g.cin * g.lin], nb);
        let mut dy2 = Array2::<T>::zeros((g.cout, nb * g.lout));
        {
            let d = dy2.as_slice_mut().unwrap();
            for bl in 0..nb {
                for co in 0..g.cout {
                    let src = &dys[((b0 + bl) * g.cout + co) * g.lout..][..g.lout];
                    d[co * nb * g.lout + bl * g.lout..][..g.lout].copy_from_slice(src);
                }
            }
        }
        let mut dw = Array2::<T>::zeros((g.cout, g.cin * g.k));
        general_mat_mul(T::one(), &dy2, &cols.t(), T::zero(), &mut dw);
        let db: Vec<T> = dy2.rows().into_iter().map(|r| r.sum()).collect();
        if let Some(dx) = dx {
            let mut dcols = Array2::<T>::zeros((g.cin * g.k, nb * g.lout));
            general_mat_mul(T::one(), &w.t(), &dy2, T::zero(), &mut dcols);
            g.col2im(&dcols, nb, dx);
        }
        (dw, db)
    };

    let mut dx = need_input_grad.then(|| Array3::<T>::zeros(x.dim()));
    let parts = match dx.as_mut() {
        Some(dx) => map_chunks_mut(dx.as_slice_mut().unwrap(), BATCH_CHUNK * g.cin * g.lin, Exec::Auto, |c, s| {
            chunk_grads(c, Some(s))
        }),
        None => map_range(batch.div_ceil(BATCH_CHUNK), Exec::Auto, |c| chunk_grads(c, None)),
    };
    let mut dw = vec![T::zero(); g.cout * g.cin * g.k];
    let mut db = vec![T::zero(); g.cout];
    for (pw, pb) in parts {
        for (a, b) in dw.iter_mut().zip(pw.iter()) {
            *a += *b;
        }
        for (a, b) in db.iter_mut().zip(&pb) {
            *a += *b;
        }
    }
    (dw, db, dx)
}

/// Per-channel batch statistics gathered during a train-mode forward pass.
#[derive(Debug, Clone)]
pub(crate) struct BatchStats {
    pub mean: Vec<f64>,
    /// Unbiased variance, used for the running estimate.
    pub var: Vec<f64>,
}

pub(crate) struct BnOut<T> {
    pub y: Array3<T>,
    pub x_hat: Array3<T>,
    pub inv_std: Vec<T>,
    pub stats: Option<BatchStats>,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn batchnorm_forward<T: Real>(
    x: &Array3<T>,
    gamma: &[T],
    beta: &[T],
    running_mean: &[T],
    running_var: &[T],
    eps: f64,
    mode: Mode,
) -> BnOut<T> {
    let (b, c, l) = x.dim();
    let xs = x.as_slice().expect("standard layout");
    let n = (b * l) as f64;
    let (mean, var_biased, stats) = match mode {
        Mode::Train => {
            let mut mean = vec![0.0f64; c];
            let mut var = vec![0.0f64; c];
            for ch in 0..c {
                let mut s = 0.0;
                for bi in 0..b {
                    s += xs[(bi * c + ch) * l..][..l].iter().map(|v| v.f64()).sum::<f64>();
                }
                let mu = s / n;
                let mut sq = 0.0;
                for bi in 0..b {
                    sq += xs[(bi * c + ch) * l..][..l].iter().map(|v| (v.f64() - mu).powi(2)).sum::<f64>();
                }
                mean[ch] = mu;
                var[ch] = sq / n;
            }
            let unbiased = var
                .iter()
                .map(|v| if n > 1.0 { v * n / (n - 1.0) } else { *v })
                .collect();
            let stats = BatchStats {
                mean: mean.clone(),
                var: unbiased,
            };
            (mean, var, Some(stats))
        }
        Mode::Infer => (
            running_mean.iter().map(|v| v.f64()).collect(),
            running_var.iter().map(|v| v.f64()).collect(),
            None,
        ),
    };
    let inv_std: Vec<T> = var_biased.iter().map(|v| T::of(1.0 / (v + eps).sqrt())).collect();
    let mean_t: Vec<T> = mean.iter().map(|&m| T::of(m)).collect();
    let mut x_hat = Array3::<T>::zeros((b, c, l));
    let mut y = Array3::<T>::zeros((b, c, l));
    {
        let xh = x_hat.as_slice_mut().unwrap();
        let ys = y.as_slice_mut().unwrap();
        for bi in 0..b {
            for ch in 0..c {
                let base = (bi * c + ch) * l;
                for t in 0..l {
                    let h = (xs[base + t] - mean_t[ch]) * inv_std[ch];
                    xh[base + t] = h;
                    ys[base + t] = gamma[ch] * h + beta[ch];
                }
            }
        }
    }
    BnOut { y, x_hat, inv_std, stats }
}

/// Returns `(grad_gamma, grad_beta, grad_input)`.
pub(crate) fn batchnorm_backward<T: Real>(
    dy: &Array3<T>,
    x_hat: &Array3<T>,
    inv_std: &[T],
    gamma: &[T],
    mode: Mode,
) -> (Vec<T>, Vec<T>, Array3<T>) {
    let (b, c, l) = dy.dim();
    let dys = dy.as_slice().unwrap();
    let xh = x_hat.as_slice().unwrap();
    let n = (b * l) as f64;
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    let mut dx = Array3::<T>::zeros((b, c, l));
    let dxs = dx.as_slice_mut().unwrap();
    for ch in 0..c {
        let (mut sdy, mut sdyx) = (0.0f64, 0.0f64);
        for bi in 0..b {
            let base = (bi * c + ch) * l;
            for t in 0..l {
                sdy += dys[base + t].f64();
                sdyx += (dys[base + t] * xh[base + t]).f64();
            }
        }
        dgamma[ch] = T::of(sdyx);
        dbeta[ch] = T::of(sdy);
        let scale = gamma[ch] * inv_std[ch];
        match mode {
            Mode::Train => {
                let (mdy, mdyx) = (T::of(sdy / n), T::of(sdyx / n));
                for bi in 0..b {
                    let base = (bi * c + ch) * l;
                    for t in 0..l {
                        dxs[base + t] = scale * (dys[base + t] - mdy - xh[base + t] * mdyx);
                    }
                }
            }
            Mode::Infer => {
                for bi in 0..b {
                    let base = (bi * c + ch) * l;
                    for t in 0..l {
                        dxs[base + t] = scale * dys[base + t];
                    }
                }
            }
        }
    }
    (dgamma, dbeta, dx)
}

pub(crate) fn relu_forward<T: Real>(mut x: Array3<T>) -> Array3<T> {
    x.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() });
    x
}

pub(crate) fn relu_backward<T: Real>(dy: &Array3<T>, y: &Array3<T>) -> Array3<T> {
    let mut dx = dy.clone();
    ndarray::Zip::from(&mut dx).and(y).for_each(|d, &o| {
        if o <= T::zero() {
            *d = T::zero();
        }
    });
    dx
}

/// Max over time. Ties resolve to the earliest position.
pub(crate) fn maxpool_forward<T: Real>(x: &Array3<T>) -> (Array3<T>, Vec<usize>) {
    let (b, c, l) = x.dim();
    let xs = x.as_slice().unwrap();
    let mut y = Array3::<T>::zeros((b, c, 1));
    let mut arg = vec![0usize; b * c];
    for (k, row) in xs.chunks_exact(l).enumerate() {
        let mut best = 0;
        for t in 1..l {
            if row[t] > row[best] {
                best = t;
            }
        }
        arg[k] = best;
        y.as_slice_mut().unwrap()[k] = row[best];
    }
    (y, arg)
}

pub(crate) fn maxpool_backward<T: Real>(dy: &Array3<T>, arg: &[usize], len: usize) -> Array3<T> {
    let (b, c, _) = dy.dim();
    let mut dx = Array3::<T>::zeros((b, c, len));
    let dxs = dx.as_slice_mut().unwrap();
    for (k, (&a, &d)) in arg.iter().zip(dy.iter()).enumerate() {
        dxs[k * len + a] = d;
    }
    dx
}

pub(crate) fn dense_forward<T: Real>(x: &Array3<T>, weight: &[T], bias: &[T], inputs: usize, outputs: usize) -> Array3<T> {
    let b = x.dim().0;
    let xv = ArrayView2::from_shape((b, inputs), x.as_slice().unwrap()).unwrap();
    let w = ArrayView2::from_shape((outputs, inputs), weight).unwrap();
    let mut y = Array2::<T>::zeros((b, outputs));
    for mut row in y.rows_mut() {
        row.iter_mut().zip(bias).for_each(|(v, &bb)| *v = bb);
    }
    general_mat_mul(T::one(), &xv, &w.t(), T::one(), &mut y);
    y.into_shape_with_order((b, outputs, 1)).unwrap()
}

/// Returns `(grad_weight, grad_bias, grad_input)`.
pub(crate) fn dense_backward<T: Real>(
    x: &Array3<T>,
    dy: &Array3<T>,
    weight: &[T],
    inputs: usize,
    outputs: usize,
    need_input_grad: bool,
) -> (Vec<T>, Vec<T>, Option<Array3<T>>) {
    let b = x.dim().0;
    let xv = ArrayView2::from_shape((b, inputs), x.as_slice().unwrap()).unwrap();
    let dyv = ArrayView2::from_shape((b, outputs), dy.as_slice().unwrap()).unwrap();
    let w = ArrayView2::from_shape((outputs, inputs), weight).unwrap();
    let mut dw = Array2::<T>::zeros((outputs, inputs));
    general_mat_mul(T::one(), &dyv.t(), &xv, T::zero(), &mut dw);
    let db: Vec<T> = dyv.columns().into_iter().map(|c| c.sum()).collect();
    let dx = need_input_grad.then(|| {
        let mut dx = Array2::<T>::zeros((b, inputs));
        general_mat_mul(T::one(), &dyv, &w, T::zero(), &mut dx);
        dx.into_shape_with_order((b, inputs, 1)).unwrap()
    });
    (dw.into_raw_vec_and_offset().0, db, dx)
}

#[inline]
fn nearest_source(t: usize, lin: usize, lout: usize) -> usize {
    (t * lin / lout).min(lin - 1)
}

pub(crate) fn upsample_forward<T: Real>(x: &Array3<T>, lout: usize) -> Array3<T> {
    let (b, c, lin) = x.dim();
    let xs = x.as_slice().unwrap();
    let mut y = Array3::<T>::zeros((b, c, lout));
    for (dst, src) in y.as_slice_mut().unwrap().chunks_exact_mut(lout).zip(xs.chunks_exact(lin)) {
        for (t, d) in dst.iter_mut().enumerate() {
            *d = src[nearest_source(t, lin, lout)];
        }
    }
    y
}

pub(crate) fn upsample_backward<T: Real>(dy: &Array3<T>, lin: usize) -> Array3<T> {
    let (b, c, lout) = dy.dim();
    let mut dx = Array3::<T>::zeros((b, c, lin));
    for (dst, src) in dx
        .as_slice_mut()
        .unwrap()
        .chunks_exact_mut(lin)
        .zip(dy.as_slice().unwrap().chunks_exact(lout))
    {
        for (t, &s) in src.iter().enumerate() {
            dst[nearest_source(t, lin, lout)] += s;
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn conv(cin: usize, cout: usize, k: usize, stride: usize, padding: Padding, dil: usize) -> LayerSpec {
        LayerSpec::Conv1d {
            in_channels: cin,
            out_channels: cout,
            kernel: k,
            stride,
            padding,
            dilation: dil,
        }
    }

    /// Direct evaluation of the convolution sum, independent of im2col.
    fn conv_naive(x: &Array3<f64>, w: &[f64], bias: &[f64], spec: &LayerSpec) -> Array3<f64> {
        let g = ConvGeom::new(spec, x.dim().2).unwrap();
        let mut y = Array3::zeros((x.dim().0, g.cout, g.lout));
        for b in 0..x.dim().0 {
            for co in 0..g.cout {
                for t in 0..g.lout {
                    let mut s = bias[co];
                    for ci in 0..g.cin {
                        for kk in 0..g.k {
                            let pos = (t * g.stride + kk * g.dil) as isize - g.pad_l as isize;
                            if pos >= 0 && (pos as usize) < g.lin {
                                s += w[(co * g.cin + ci) * g.k + kk] * x[[b, ci, pos as usize]];
                            }
                        }
                    }
                    y[[b, co, t]] = s;
                }
            }
        }
        y
    }

    #[test]
    fn conv_lengths() {
        let g = ConvGeom::new(&conv(1, 8, 7, 2, Padding::Fixed(3), 1), 1000).unwrap();
        assert_eq!(g.lout, 500);
        let g = ConvGeom::new(&conv(16, 16, 20, 1, Padding::Same, 32), 256).unwrap();
        assert_eq!(g.lout, 256);
        let g = ConvGeom::new(&conv(16, 16, 20, 1, Padding::Same, 1), 7).unwrap();
        assert_eq!(g.lout, 7);
        assert!(ConvGeom::new(&conv(1, 1, 5, 2, Padding::Same, 1), 9).is_err());
        assert!(ConvGeom::new(&conv(1, 1, 5, 1, Padding::Fixed(0), 1), 4).is_err());
    }

    #[test]
    fn conv_matches_naive() {
        let specs = [
            conv(2, 3, 7, 2, Padding::Fixed(3), 1),
            conv(3, 2, 5, 1, Padding::Same, 4),
            conv(1, 4, 20, 1, Padding::Same, 3),
            conv(2, 2, 3, 2, Padding::Fixed(1), 1),
        ];
        for spec in &specs {
            let (cin, cout, k) = match *spec {
                LayerSpec::Conv1d { in_channels, out_channels, kernel, .. } => (in_channels, out_channels, kernel),
                _ => unreachable!(),
            };
            let x = Array3::from_shape_fn((11, cin, 13), |(b, c, t)| ((b * 7 + c * 3 + t) as f64 * 0.37).sin());
            let w: Vec<f64> = (0..cout * cin * k).map(|i| (i as f64 * 0.11).cos()).collect();
            let bias: Vec<f64> = (0..cout).map(|i| i as f64 * 0.1).collect();
            let g = ConvGeom::new(spec, 13).unwrap();
            let fast = conv_forward(&x, &w, &bias, &g);
            let slow = conv_naive(&x, &w, &bias, spec);
            assert_eq!(fast.dim(), slow.dim());
            for (a, b) in fast.iter().zip(slow.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_kernel() {
        let spec = conv(1, 1, 1, 1, Padding::Fixed(0), 1);
        let x = array![[[0.5, -1.0, 2.0]]];
        let g = ConvGeom::new(&spec, 3).unwrap();
        assert_eq!(conv_forward(&x, &[1.0], &[0.0], &g), x);
    }

    #[test]
    fn relu_and_pool() {
        let y = relu_forward(array![[[-1.0, 0.0, 2.0]]]);
        assert_eq!(y, array![[[0.0, 0.0, 2.0]]]);
        let (p, arg) = maxpool_forward(&array![[[1.0, 3.0, 2.0], [0.0, -1.0, 5.0]]]);
        assert_eq!(p, array![[[3.0], [5.0]]]);
        assert_eq!(arg, vec![1, 2]);
    }

    #[test]
    fn dense_bias_grad_is_ones() {
        let x = array![[[1.0], [2.0]], [[-1.0], [0.5]]];
        let w = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let dy = Array3::from_elem((2, 3, 1), 1.0);
        let (_, db, _) = dense_backward(&x, &dy, &w, 2, 3, false);
        // Two samples, each contributing 1 to every output.
        assert_eq!(db, vec![2.0, 2.0, 2.0]);
        let (_, db1, _) = dense_backward(&x.slice(ndarray::s![..1, .., ..]).to_owned(), &dy.slice(ndarray::s![..1, .., ..]).to_owned(), &w, 2, 3, false);
        assert_eq!(db1, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn upsample_identity_when_same_length() {
        let x = array![[[1.0, 2.0, 3.0]]];
        assert_eq!(upsample_forward(&x, 3), x);
        assert_eq!(upsample_forward(&x, 6), array![[[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]]]);
        assert_eq!(upsample_backward(&array![[[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]]], 3), array![[[2.0, 4.0, 6.0]]]);
    }
}
