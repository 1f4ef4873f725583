//! The three fixed topologies: length-invariant encoder, dilated
//! convolutional decoder, and the direct pair regressor.

use crate::nn::layers::{LayerSpec, Padding};
use crate::nn::network::NetworkSpec;

/// `(out_channels, kernel, stride)` of each encoder block.
pub const ENCODER_BLOCKS: [(usize, usize, usize); 8] = [
    (8, 7, 2),
    (16, 7, 2),
    (32, 5, 2),
    (64, 5, 2),
    (128, 3, 2),
    (128, 3, 2),
    (256, 3, 2),
    (256, 3, 2),
];
pub const ENCODER_MIN_LEN: usize = 256;
pub const ENCODER_MAX_LEN: usize = 3000;

pub const DECODER_CHANNELS: usize = 16;
pub const DECODER_KERNEL: usize = 20;
pub const DECODER_DILATIONS: [usize; 6] = [32, 16, 8, 4, 2, 1];

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

fn batchnorm(channels: usize) -> LayerSpec {
    LayerSpec::BatchNorm {
        channels,
        eps: BN_EPS,
        momentum: BN_MOMENTUM,
    }
}

fn conv_stack(in_channels: usize, blocks: &[(usize, usize, usize)]) -> Vec<LayerSpec> {
    let mut layers = Vec::with_capacity(blocks.len() * 3 + 1);
    let mut cin = in_channels;
    for &(out, kernel, stride) in blocks {
        layers.push(LayerSpec::Conv1d {
            in_channels: cin,
            out_channels: out,
            kernel,
            stride,
            padding: Padding::Fixed(kernel / 2),
            dilation: 1,
        });
        layers.push(batchnorm(out));
        layers.push(LayerSpec::Relu);
        cin = out;
    }
    layers.push(LayerSpec::GlobalMaxPool);
    layers
}

/// Maps a single-channel series of any admissible length to `[hidden, 1]`.
pub fn build_encoder(name: &str, hidden: usize) -> NetworkSpec {
    let mut layers = conv_stack(1, &ENCODER_BLOCKS);
    layers.push(LayerSpec::Dense {
        inputs: ENCODER_BLOCKS[7].0,
        outputs: hidden,
    });
    NetworkSpec {
        name: name.into(),
        in_channels: 1,
        input_len: Some((ENCODER_MIN_LEN, ENCODER_MAX_LEN)),
        layers,
    }
}

/// Takes an embedding viewed as a one-channel sequence of length `hidden`
/// and reconstructs a series of the length given at forward time.
pub fn build_decoder(name: &str, hidden: usize) -> NetworkSpec {
    build_decoder_with(name, hidden, DECODER_KERNEL, &DECODER_DILATIONS)
}

pub fn build_decoder_with(name: &str, hidden: usize, kernel: usize, dilations: &[usize]) -> NetworkSpec {
    let mut layers = vec![LayerSpec::UpsampleNearest { target: None }];
    let mut cin = 1;
    for &dilation in dilations {
        layers.push(LayerSpec::Conv1d {
            in_channels: cin,
            out_channels: DECODER_CHANNELS,
            kernel,
            stride: 1,
            padding: Padding::Same,
            dilation,
        });
        layers.push(LayerSpec::Relu);
        cin = DECODER_CHANNELS;
    }
    layers.push(LayerSpec::Conv1d {
        in_channels: cin,
        out_channels: 1,
        kernel: 1,
        stride: 1,
        padding: Padding::Fixed(0),
        dilation: 1,
    });
    NetworkSpec {
        name: name.into(),
        in_channels: 1,
        input_len: Some((hidden, hidden)),
        layers,
    }
}

/// Regresses a distance from a two-channel stacked pair.
pub fn build_direct(name: &str, hidden: usize) -> NetworkSpec {
    let mut layers = conv_stack(2, &ENCODER_BLOCKS);
    layers.extend([
        LayerSpec::Dense {
            inputs: ENCODER_BLOCKS[7].0,
            outputs: hidden,
        },
        batchnorm(hidden),
        LayerSpec::Relu,
        LayerSpec::Dense { inputs: hidden, outputs: 1 },
    ]);
    NetworkSpec {
        name: name.into(),
        in_channels: 2,
        input_len: Some((ENCODER_MIN_LEN, ENCODER_MAX_LEN)),
        layers,
    }
}
