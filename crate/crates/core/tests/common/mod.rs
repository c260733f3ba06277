#![allow(dead_code)]

use std::path::PathBuf;

use mlmkit::corpus::{
    default_abbreviations, normalize_documents, split_sentences, Document, SentenceDocument,
};
use mlmkit::model::ModelConfig;
use mlmkit::tokenizer::{train_wordpiece, word_frequencies, TokenizerConfig, WordPiece};
use mlmkit::training::{MaskingPolicy, PhaseConfig, TrainConfig};

pub fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

/// The bundled 50-sentence desk corpus, one document per raw file.
pub fn desk_documents() -> Vec<SentenceDocument> {
    let dir = assets().join("desk/raw");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    let docs = files
        .iter()
        .map(|p| {
            let id = p.file_stem().unwrap().to_string_lossy().into_owned();
            Document::new(id, std::fs::read_to_string(p).unwrap(), "desk")
        })
        .collect();
    let (docs, _) = normalize_documents(docs);
    let abbreviations = default_abbreviations();
    docs.iter().map(|d| split_sentences(d, &abbreviations)).collect()
}

pub fn desk_tokenizer(docs: &[SentenceDocument], vocab_size: usize) -> WordPiece {
    let config = TokenizerConfig {
        vocab_size,
        ..TokenizerConfig::default()
    };
    let texts: Vec<String> = docs.iter().map(|d| d.text()).collect();
    let vocab = train_wordpiece(&word_frequencies(texts.iter().map(String::as_str)), &config).unwrap();
    WordPiece::new(vocab, config)
}

pub fn tiny_model(vocab_size: usize, max_positions: usize) -> ModelConfig {
    ModelConfig {
        num_layers: 2,
        hidden_size: 64,
        num_heads: 4,
        ffn_size: 256,
        vocab_size,
        max_positions,
        ..ModelConfig::default()
    }
}

/// Desk schedule: short phases, proportionally shortened warmup. Phase-1
/// rows of 40 tokens hold two sentences of the desk corpus.
pub fn desk_train_config(epochs1: u32, epochs2: u32) -> TrainConfig {
    TrainConfig {
        phase1: PhaseConfig {
            batch_size: 10,
            sequence_length: 40,
            epochs: epochs1,
        },
        phase2: PhaseConfig {
            batch_size: 5,
            sequence_length: 64,
            epochs: epochs2,
        },
        learning_rate: 3e-3,
        warmup_steps: 10,
        rng_seed: 7,
        pairs_per_sentence: 2,
        masking: MaskingPolicy::default(),
        ..TrainConfig::default()
    }
}
