//! Masked-word evaluation: overlapping word windows, one masked word per
//! window, top-k word match scored over several runs.

mod predictor;
mod report;
mod score;
mod windows;

pub use predictor::{
    predict_topk_wordpiece, AdversarialPredictor, CheckpointPredictor, OraclePredictor, Predictor,
    UniformPredictor,
};
pub use report::{render_table, run_evaluation, CellStats, EvalReport, ReportRow};
pub use score::{aggregate_runs, format_score, score_run, RunScore};
pub use windows::{make_eval_sequences, window_count};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("text has {found} words; at least {required} are needed for one window")]
    TextTooShort { required: usize, found: usize },
    #[error("no scorable sequences for predictor `{predictor}` ({skipped} skipped)")]
    NothingScored { predictor: String, skipped: usize },
    #[error("cannot aggregate an empty list of runs")]
    NoRuns,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which words may be chosen as the masked word of a window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskablePolicy {
    /// Only words the tokenizer encodes as one vocabulary token.
    #[default]
    SingleTokenWordsOnly,
    /// Any word; multi-piece words are masked piece by piece and must be
    /// recovered jointly.
    AllWords,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub window_words: usize,
    pub stride_words: usize,
    pub top_ks: Vec<usize>,
    pub num_runs: usize,
    pub rng_seed: u64,
    pub maskable_policy: MaskablePolicy,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            window_words: 128,
            stride_words: 64,
            top_ks: vec![1, 3, 5],
            num_runs: 5,
            rng_seed: 12345,
            maskable_policy: MaskablePolicy::SingleTokenWordsOnly,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let fail = |m: &str| Err(EvalError::InvalidConfig(m.to_string()));
        if self.window_words == 0 {
            return fail("window_words must be positive");
        }
        if self.stride_words == 0 || self.stride_words > self.window_words {
            return fail("stride_words must lie in 1..=window_words");
        }
        if self.top_ks.is_empty() || self.top_ks[0] == 0 {
            return fail("top_ks must be non-empty and positive");
        }
        if self.top_ks.windows(2).any(|w| w[0] >= w[1]) {
            return fail("top_ks must be strictly ascending");
        }
        if self.num_runs == 0 {
            return fail("num_runs must be positive");
        }
        Ok(())
    }

    pub fn max_k(&self) -> usize {
        self.top_ks.last().copied().unwrap_or(0)
    }
}

/// One window with its masked word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSequence {
    /// Word offset of the window in the source text.
    pub offset: usize,
    pub words: Vec<String>,
    pub masked_index: usize,
    pub gold_word: String,
}
