//! A small encoder-decoder segmentation network written out by hand.
//!
//! HR and OT images enter as two channels; a sigmoid head produces a
//! pore-probability map of the same size. Every layer has an explicit
//! backward pass, generic over `f32` (training) and `f64` (gradient checks).
//! Samples of a batch are processed in parallel and their gradients summed
//! in batch order, so results do not depend on the thread count.

mod error;
pub mod layers;
mod model;
mod scalar;
mod tensor;
mod train;
mod weights;

pub use error::NnError;
pub use model::{Gradients, ModelConfig, Network, OutActivation, SkipMode, Tape};
pub use scalar::Scalar;
pub use tensor::Tensor4;
pub use train::{
    evaluate, predict_batch, predict_samples, samples_for, train, train_samples, zero_baseline, EpochLog,
    HyperParams, Prediction, Sample, TrainReport, BATCH_CHOICES, LR_RANGE,
};
pub use weights::{backward, forward, mae_loss, AdamState, Weights, HEADER_FILE};
