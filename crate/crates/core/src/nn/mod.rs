//! A small differentiable network kernel.
//!
//! Networks are sequential chains of layers over `[batch, channels, length]`
//! arrays. Each layer implements its own forward and backward pass; the
//! network records per-layer caches during the forward pass and replays them
//! in reverse. Everything is generic over [`Real`] so the same code trains in
//! `f32` and is gradient-checked in `f64`.

mod adam;
mod arch;
mod checkpoint;
mod layers;
mod models;
mod network;
mod params;

pub use adam::{AdamConfig, AdamState};
pub use arch::{build_decoder, build_decoder_with, build_direct, build_encoder, DECODER_CHANNELS, DECODER_DILATIONS, DECODER_KERNEL, ENCODER_BLOCKS, ENCODER_MAX_LEN, ENCODER_MIN_LEN};
pub use checkpoint::{BestRecord, Checkpoint, ModelKind, CHECKPOINT_VERSION};
pub use layers::{LayerSpec, Padding};
pub use models::{concat_pair, concat_pairs, euclidean, stack_signals, DirectModel, SiameseModel, INFER_BATCH};
pub use network::{ForwardCache, Mode, NetworkSpec};
pub use params::{Gradients, ParamArray, ParamStore};

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type of a network.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite conversion")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Samples per work chunk in batched layers. Fixed so that reductions over
/// chunks do not depend on the thread count.
pub(crate) const BATCH_CHUNK: usize = 8;
