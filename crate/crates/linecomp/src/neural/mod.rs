//! Neural estimators for next-token distributions.
//!
//! Two architectures share one parameter container and one tied-embedding
//! output head: a small pre-norm transformer and a single-layer GRU
//! baseline.  Forward passes return dense hidden rows; loss and decoding
//! both go through the tied projection, so the embedding matrix is the
//! only vocabulary-sized tensor in the model.

pub mod adam;
pub mod checkpoint;
pub mod config;
pub mod gru;
pub mod loss;
pub mod model;
pub mod ops;
pub mod params;
pub mod train;
pub mod transformer;

pub use adam::Adam;
pub use checkpoint::CheckpointError;
pub use config::{Arch, ConfigError, ModelConfig, TrainConfig};
pub use loss::{masked_nll, next_log_probs, tied_output_loss};
pub use model::{
    backward, forward, gradient_check, loss_and_grads, sequence_log_probs, ForwardCache,
    GradCheckReport,
};
pub use params::ModelParams;
pub use train::{evaluate_nll, make_batch, train, Batch, EpochStats, TrainError, TrainOutcome};
