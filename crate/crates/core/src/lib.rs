//! Learned approximations of Dynamic Time Warping for one-dimensional series.
//!
//! The crate is organised in five layers:
//!
//! - [`metrics`]: exact DTW (with a brute-force oracle), FastDTW, SoftDTW with
//!   its gradient, and pairwise ground-truth construction.
//! - [`nn`]: a small differentiable network kernel (conv1d, batchnorm, relu,
//!   pooling, dense, upsampling) with layer-wise reverse-mode gradients, Adam,
//!   the encoder/decoder/direct-regression topologies and checkpoints.
//! - [`data`]: datasets on disk, percentile clipping, min-max scaling, slicing,
//!   pair sampling and a synthetic EEG-like generator.
//! - [`train`]: the siamese encoder-decoder trainer and the direct-regression
//!   trainer, with early stopping.
//! - [`eval`]: nearest-neighbour retrieval agreement, KNN macro-F1, timing and
//!   prototype learning through a frozen model.
//!
//! Pairwise work (ground truth, distance matrices, batched convolutions) runs
//! on rayon when the `parallel` feature is enabled, and sequentially otherwise.
//! Both paths use the same work decomposition, so results are bit-identical.

pub mod data;
pub mod error;
pub mod eval;
pub mod io;
pub mod metrics;
pub mod nn;
pub mod par;
pub mod series;
pub mod train;

pub use error::{Error, Result};
pub use series::{TimeSeries, WarpingPath};
