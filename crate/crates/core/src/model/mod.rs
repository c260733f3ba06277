//! BERT-style encoder with MLM and NSP heads, hand-written backpropagation
//! and a manifest + raw-payload checkpoint format.

mod batch;
mod checkpoint;
mod config;
mod forward;
mod loss;
mod state;
mod tensor;

pub use batch::Batch;
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, Moments, PhaseMeta, CHECKPOINT_FORMAT_VERSION,
};
pub use config::{count_parameters, is_layer_norm, is_no_decay, param_shapes, Activation, ModelConfig};
pub use forward::{ForwardOutput, Mode};
pub use loss::{loss, LossValue};
pub use state::{init_model, Embeddings, EncoderLayer, EncoderState, LayerNorm, Linear, MlmHead};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("sequence length {len} exceeds max_positions {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("token id {id} is outside the vocabulary of size {vocab}")]
    TokenOutOfRange { id: u32, vocab: usize },
    #[error("malformed batch: {0}")]
    BatchShape(String),
    #[error("batch has no MLM labels and no NSP labels")]
    NoLabels,
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("tensor {name}: checkpoint shape {found:?} does not match config shape {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("{file} is truncated: expected {expected} bytes, found {found}")]
    Truncated {
        file: String,
        expected: usize,
        found: usize,
    },
    #[error("bad checkpoint manifest: {0}")]
    Manifest(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
