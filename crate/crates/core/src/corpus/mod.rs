//! Corpus ingestion: normalization, abbreviation-aware sentence splitting,
//! word statistics and deterministic train/validation partitioning.

mod io;
mod normalize;
mod sentences;
mod split;

pub use io::{
    format_corpus, parse_abbreviations, parse_corpus, read_abbreviations, read_corpus, write_corpus,
};
pub use normalize::{normalize_bytes, normalize_text};
pub use sentences::{default_abbreviations, split_sentences, Abbreviations};
pub use split::{corpus_stats, split_corpus, word_count, CorpusStats, SourceStats, SplitSpec};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },
    #[error("corpus is empty")]
    Empty,
    #[error("validation fraction {0} is outside [0, 1)")]
    InvalidFraction(f64),
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A raw or normalized text document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source_tag: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, source_tag: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            source_tag: source_tag.into(),
        }
    }

    pub fn word_count(&self) -> usize {
        word_count(&self.text)
    }
}

/// A document segmented into ordered, non-empty normalized sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceDocument {
    pub id: String,
    pub sentences: Vec<String>,
}

impl SentenceDocument {
    pub fn word_count(&self) -> usize {
        self.sentences.iter().map(|s| word_count(s)).sum()
    }

    /// The document text with sentences joined by single spaces.
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flat_map(|s| s.split_whitespace())
    }
}

/// Normalizes every document, dropping the ones that end up empty.
///
/// Returns the surviving documents and the number dropped.
pub fn normalize_documents(docs: Vec<Document>) -> (Vec<Document>, usize) {
    let before = docs.len();
    let kept: Vec<Document> = docs
        .into_iter()
        .filter_map(|mut doc| {
            doc.text = normalize_text(&doc.text);
            (!doc.text.is_empty()).then_some(doc)
        })
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}
