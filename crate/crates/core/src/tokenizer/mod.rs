//! WordPiece training and encoding, pair packing for NSP inputs, and an
//! experimental finite-state suffix segmenter.

mod encode;
mod morph;
mod pair;
mod train;
mod vocab;

pub use encode::WordPiece;
pub use morph::{segment_morph, MorphParse, Morpheme, SuffixFsm, BUNDLED_FSM};
pub use pair::{build_pair_input, PairInput};
pub use train::{train_wordpiece, word_frequencies};
pub use vocab::{
    Vocabulary, CLS_ID, DEFAULT_CONTINUATION_PREFIX, MASK_ID, NUM_SPECIAL, PAD_ID, SEP_ID, SPECIAL_TOKENS,
    UNK_ID,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum TokenizerError {
    #[error("vocab_size {requested} is smaller than the {required} special and alphabet tokens")]
    VocabTooSmall { requested: usize, required: usize },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("expected special token {expected} at id {id}, found `{found}`")]
    SpecialLayout {
        id: u32,
        expected: String,
        found: String,
    },
    #[error("duplicate vocabulary token `{0}`")]
    DuplicateToken(String),
    #[error("empty vocabulary token at id {id}")]
    EmptyToken { id: u32 },
    #[error("token id {id} out of range for vocabulary of {size}")]
    IdOutOfRange { id: u32, size: usize },
    #[error("max_len {0} cannot hold [CLS] a [SEP] b [SEP] with one token per segment")]
    MaxLenTooSmall(usize),
    #[error("invalid tokenizer config: {0}")]
    InvalidConfig(String),
    #[error("FSM file line {line}: {message}")]
    FsmSyntax { line: usize, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TokenizerConfig {
    pub vocab_size: usize,
    pub lowercase: bool,
    pub continuation_prefix: String,
    pub max_chars_per_word: usize,
    pub min_pair_frequency: u64,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            vocab_size: 30_000,
            lowercase: true,
            continuation_prefix: DEFAULT_CONTINUATION_PREFIX.to_string(),
            max_chars_per_word: 100,
            min_pair_frequency: 2,
        }
    }
}

impl TokenizerConfig {
    pub fn validate(&self) -> Result<(), TokenizerError> {
        if self.continuation_prefix.is_empty() {
            return Err(TokenizerError::InvalidConfig(
                "continuation_prefix is empty".into(),
            ));
        }
        if self.max_chars_per_word == 0 {
            return Err(TokenizerError::InvalidConfig(
                "max_chars_per_word must be positive".into(),
            ));
        }
        if self.min_pair_frequency == 0 {
            return Err(TokenizerError::InvalidConfig(
                "min_pair_frequency must be positive".into(),
            ));
        }
        if self.vocab_size <= NUM_SPECIAL as usize {
            return Err(TokenizerError::VocabTooSmall {
                requested: self.vocab_size,
                required: NUM_SPECIAL as usize + 1,
            });
        }
        Ok(())
    }
}
