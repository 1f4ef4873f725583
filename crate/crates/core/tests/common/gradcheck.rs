//! Central finite-difference gradient checks in double precision.

use learned_dtw::data::rng_from_seed;
use learned_dtw::nn::{
    build_decoder, build_decoder_with, build_direct, build_encoder, Gradients, LayerSpec, Mode, NetworkSpec, Padding, ParamStore,
};
use ndarray::Array3;
use rand::Rng;

/// Step for single layers and two-block stacks.
pub const STEP: f64 = 1e-4;
/// Full topologies contain thousands of ReLU units; a smaller step keeps the
/// perturbation from crossing their kinks.
pub const DEEP_STEP: f64 = 1e-6;
pub const TOL: f64 = 1e-3;
/// Gradient norms below this count as zero (for instance a bias feeding a
/// train-mode normalization layer).
const ZERO: f64 = 1e-6;

/// Loss is a fixed random projection of the output, so every output element
/// carries a distinct weight.
struct Probe {
    x: Array3<f64>,
    proj: Array3<f64>,
    mode: Mode,
    target: Option<usize>,
}

fn loss(net: &NetworkSpec, store: &ParamStore<f64>, p: &Probe, x: &Array3<f64>) -> f64 {
    let (y, _) = net.forward(store, x.clone(), p.mode, p.target).unwrap();
    (&y * &p.proj).sum()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na.max(nb) < ZERO {
        return 0.0;
    }
    diff / na.max(nb)
}

/// Largest relative error over up to `per_array` coordinates of every
/// trainable array (all of them when `None`) and over the input.
#[allow(clippy::too_many_arguments)]
pub fn max_rel_err(
    net: &NetworkSpec,
    in_len: usize,
    batch: usize,
    mode: Mode,
    target: Option<usize>,
    per_array: Option<usize>,
    step: f64,
    seed: u64,
) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut store: ParamStore<f64> = net.new_params(&mut rng).unwrap();
    // Non-trivial normalization parameters and running statistics.
    for a in store.arrays_mut() {
        if a.name.ends_with("gamma") || a.name.ends_with("running_var") {
            a.values.iter_mut().for_each(|v| *v = rng.random_range(0.5..1.5));
        } else if a.name.ends_with("beta") || a.name.ends_with("running_mean") {
            a.values.iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
    }
    let x = Array3::from_shape_fn((batch, net.in_channels, in_len), |_| rng.random_range(-1.0..1.0));
    let (y, cache) = net.forward(&store, x.clone(), mode, target).unwrap();
    let proj = Array3::from_shape_fn(y.dim(), |_| rng.random_range(-1.0..1.0));
    let probe = Probe { x, proj, mode, target };

    let mut worst = 0.0f64;
    let mut grads = Gradients::zeros_like(&store);
    let dx = net.backward(&store, &cache, &probe.proj, &mut grads, true).unwrap().unwrap();

    for k in 0..store.len() {
        if !store.arrays()[k].trainable {
            continue;
        }
        let n = store.arrays()[k].len();
        let coords: Vec<usize> = match per_array {
            Some(m) if m < n => (0..m).map(|_| rng.random_range(0..n)).collect(),
            _ => (0..n).collect(),
        };
        let mut numeric = Vec::with_capacity(coords.len());
        for &c in &coords {
            let orig = store.arrays()[k].values[c];
            store.arrays_mut()[k].values[c] = orig + step;
            let up = loss(net, &store, &probe, &probe.x);
            store.arrays_mut()[k].values[c] = orig - step;
            let down = loss(net, &store, &probe, &probe.x);
            store.arrays_mut()[k].values[c] = orig;
            numeric.push((up - down) / (2.0 * step));
        }
        let analytic: Vec<f64> = coords.iter().map(|&c| grads.values[k][c]).collect();
        let e = rel_err(&analytic, &numeric);
        if e >= TOL {
            eprintln!("{}: relative error {e:.2e}", store.arrays()[k].name);
        }
        worst = worst.max(e);
    }

    let n = probe.x.len();
    let coords: Vec<usize> = match per_array {
        Some(m) if m < n => (0..4 * m).map(|_| rng.random_range(0..n)).collect(),
        _ => (0..n).collect(),
    };
    let mut numeric = Vec::with_capacity(coords.len());
    let mut xp = probe.x.clone();
    for &idx in &coords {
        let orig = xp.as_slice().unwrap()[idx];
        xp.as_slice_mut().unwrap()[idx] = orig + step;
        let up = loss(net, &store, &probe, &xp);
        xp.as_slice_mut().unwrap()[idx] = orig - step;
        let down = loss(net, &store, &probe, &xp);
        xp.as_slice_mut().unwrap()[idx] = orig;
        numeric.push((up - down) / (2.0 * step));
    }
    let analytic: Vec<f64> = coords.iter().map(|&c| dx.as_slice().unwrap()[c]).collect();
    let e = rel_err(&analytic, &numeric);
    if e >= TOL {
        eprintln!("input gradient: relative error {e:.2e}");
    }
    worst.max(e)
}


/// One finite-difference experiment.
pub struct Case {
    pub name: &'static str,
    pub net: NetworkSpec,
    pub in_len: usize,
    pub batch: usize,
    pub mode: Mode,
    pub target: Option<usize>,
    pub per_array: Option<usize>,
    pub step: f64,
    pub seed: u64,
}

impl Case {
    pub fn max_rel_err(&self) -> f64 {
        max_rel_err(&self.net, self.in_len, self.batch, self.mode, self.target, self.per_array, self.step, self.seed)
    }
}

fn net(in_channels: usize, layers: Vec<LayerSpec>) -> NetworkSpec {
    NetworkSpec {
        name: "g".into(),
        in_channels,
        input_len: None,
        layers,
    }
}

fn conv(cin: usize, cout: usize, kernel: usize, stride: usize, padding: Padding, dilation: usize) -> LayerSpec {
    LayerSpec::Conv1d {
        in_channels: cin,
        out_channels: cout,
        kernel,
        stride,
        padding,
        dilation,
    }
}

fn bn(channels: usize) -> LayerSpec {
    LayerSpec::BatchNorm {
        channels,
        eps: 1e-5,
        momentum: 0.1,
    }
}

fn case(name: &'static str, net: NetworkSpec, in_len: usize, batch: usize, mode: Mode, target: Option<usize>, seed: u64) -> Case {
    Case {
        name,
        net,
        in_len,
        batch,
        mode,
        target,
        per_array: None,
        step: STEP,
        seed,
    }
}

/// Every layer type on its own, a two-block stack, and the three full
/// topologies (sampled coordinates).
pub fn cases() -> Vec<Case> {
    let encoder_stack = net(
        1,
        vec![
            conv(1, 4, 7, 2, Padding::Fixed(3), 1),
            bn(4),
            LayerSpec::Relu,
            conv(4, 6, 5, 2, Padding::Fixed(2), 1),
            bn(6),
            LayerSpec::Relu,
            LayerSpec::GlobalMaxPool,
            LayerSpec::Dense { inputs: 6, outputs: 5 },
        ],
    );
    let deep = |name, net, in_len, batch, target, per_array, seed| Case {
        name,
        net,
        in_len,
        batch,
        mode: Mode::Train,
        target,
        per_array,
        step: DEEP_STEP,
        seed,
    };
    vec![
        case("conv_relu", net(1, vec![conv(1, 3, 3, 1, Padding::Fixed(1), 1), LayerSpec::Relu]), 8, 2, Mode::Train, None, 1),
        case("conv_strided", net(2, vec![conv(2, 3, 5, 2, Padding::Fixed(2), 1)]), 13, 3, Mode::Train, None, 2),
        case("conv_dilated_same", net(2, vec![conv(2, 2, 4, 1, Padding::Same, 3)]), 11, 2, Mode::Train, None, 3),
        // More samples than one work chunk.
        case("conv_many_samples", net(1, vec![conv(1, 2, 3, 1, Padding::Same, 1)]), 6, 11, Mode::Train, None, 4),
        case("batchnorm_train", net(3, vec![bn(3)]), 7, 4, Mode::Train, None, 5),
        case("batchnorm_infer", net(3, vec![bn(3)]), 7, 4, Mode::Infer, None, 6),
        case("global_max_pool", net(3, vec![LayerSpec::GlobalMaxPool]), 9, 2, Mode::Train, None, 7),
        case("dense", net(4, vec![LayerSpec::Dense { inputs: 4, outputs: 3 }]), 1, 5, Mode::Train, None, 8),
        case("upsample_to_target", net(2, vec![LayerSpec::UpsampleNearest { target: None }]), 5, 2, Mode::Train, Some(13), 9),
        case("upsample_fixed", net(2, vec![LayerSpec::UpsampleNearest { target: Some(3) }]), 8, 2, Mode::Train, None, 10),
        case("two_block_encoder", encoder_stack, 32, 3, Mode::Train, None, 11),
        deep("small_decoder", build_decoder_with("dec", 12, 5, &[4, 2, 1]), 12, 2, Some(30), None, 12),
        deep("full_encoder", build_encoder("enc", 6), 256, 8, None, Some(6), 13),
        deep("full_direct", build_direct("direct", 6), 256, 8, None, Some(6), 14),
        deep("full_decoder", build_decoder("dec", 8), 8, 2, Some(256), Some(6), 15),
    ]
}
