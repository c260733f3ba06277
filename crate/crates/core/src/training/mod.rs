//! MLM/NSP batch construction, AdamW and the two-phase pretraining loop.

mod batches;
mod masking;
mod optimizer;
mod pairs;
mod pretrain;

pub use batches::{build_batch, BuiltBatch};
pub use masking::{apply_masking, MaskingPolicy};
pub use optimizer::{adam_update, clip_global_norm, optimizer_step, OptimizerState, Schedule};
pub use pairs::{generate_pairs, sample_nsp_pair, tokenize_documents, NspPair, TokenizedDoc};
pub use pretrain::{
    pretrain, EpochMetrics, EpochOutcome, PretrainOptions, PretrainSummary, Trainer, LATEST_FILE,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelConfig, ModelError};
use crate::tokenizer::TokenizerError;

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("corpus cannot supply NSP pairs: {0}")]
    InsufficientCorpus(String),
    #[error("non-finite gradient at step {step}; update rejected")]
    NonFiniteGradient { step: u64 },
    #[error("tokenizer has {tokenizer} entries but the model expects vocab_size {model}")]
    VocabMismatch { tokenizer: usize, model: usize },
    #[error("no checkpoint to resume from in {0}")]
    NothingToResume(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub batch_size: usize,
    pub sequence_length: usize,
    pub epochs: u32,
}

/// Optimizer, schedule and data settings for both phases.
/// `Default` is the full-scale schedule: 36 epochs at 300×128, then 4 at 50×512.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub phase1: PhaseConfig,
    pub phase2: PhaseConfig,
    /// Peak learning rate.
    pub learning_rate: f64,
    pub warmup_steps: u64,
    pub weight_decay: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub max_grad_norm: f64,
    pub rng_seed: u64,
    /// 0 disables periodic checkpoints; phase boundaries are always saved.
    pub checkpoint_every_n_steps: u64,
    pub nsp_positive_rate: f64,
    /// NSP pairs generated per corpus sentence, once per phase.
    pub pairs_per_sentence: usize,
    pub masking: MaskingPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            phase1: PhaseConfig {
                batch_size: 300,
                sequence_length: 128,
                epochs: 36,
            },
            phase2: PhaseConfig {
                batch_size: 50,
                sequence_length: 512,
                epochs: 4,
            },
            learning_rate: 1e-4,
            warmup_steps: 10_000,
            weight_decay: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-6,
            max_grad_norm: 1.0,
            rng_seed: 12345,
            checkpoint_every_n_steps: 0,
            nsp_positive_rate: 0.5,
            pairs_per_sentence: 1,
            masking: MaskingPolicy::default(),
        }
    }
}

impl TrainConfig {
    pub fn phase(&self, phase: u32) -> &PhaseConfig {
        if phase == 1 {
            &self.phase1
        } else {
            &self.phase2
        }
    }

    /// Checks the config on its own and against the model it will train.
    pub fn validate(&self, model: &ModelConfig) -> Result<(), TrainingError> {
        let fail = |m: String| Err(TrainingError::InvalidConfig(m));
        for (i, p) in [(1, &self.phase1), (2, &self.phase2)] {
            if p.batch_size == 0 {
                return fail(format!("phase{i}.batch_size must be positive"));
            }
            if p.sequence_length < 5 {
                return fail(format!("phase{i}.sequence_length must be at least 5"));
            }
            if p.sequence_length > model.max_positions {
                return fail(format!(
                    "phase{i}.sequence_length {} exceeds max_positions {}",
                    p.sequence_length, model.max_positions
                ));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return fail("adam betas must lie in [0, 1)".into());
        }
        if self.adam_epsilon.is_nan()
            || self.adam_epsilon <= 0.0
            || self.weight_decay.is_nan()
            || self.weight_decay < 0.0
        {
            return fail("adam_epsilon must be positive and weight_decay non-negative".into());
        }
        if self.max_grad_norm.is_nan() || self.max_grad_norm <= 0.0 {
            return fail("max_grad_norm must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.nsp_positive_rate) {
            return fail("nsp_positive_rate must lie in [0, 1]".into());
        }
        if self.pairs_per_sentence == 0 {
            return fail("pairs_per_sentence must be positive".into());
        }
        self.masking.validate()
    }
}
