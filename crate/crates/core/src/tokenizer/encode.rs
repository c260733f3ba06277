use super::vocab::{CLS_ID, PAD_ID, SEP_ID, UNK_ID};
use super::{TokenizerConfig, TokenizerError, Vocabulary};

/// Greedy longest-match-first WordPiece encoder.
#[derive(Debug, Clone)]
pub struct WordPiece {
    vocab: Vocabulary,
    config: TokenizerConfig,
}

impl WordPiece {
    pub fn new(vocab: Vocabulary, config: TokenizerConfig) -> Self {
        Self { vocab, config }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    /// Encodes one whitespace-free word. Any unmatched position, or a word
    /// longer than `max_chars_per_word`, turns the whole word into `[UNK]`.
    pub fn encode_word(&self, word: &str) -> Vec<u32> {
        let bounds: Vec<usize> = word
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(word.len()))
            .collect();
        let chars = bounds.len() - 1;
        if chars == 0 {
            return Vec::new();
        }
        if chars > self.config.max_chars_per_word {
            return vec![UNK_ID];
        }

        let prefix = self.vocab.continuation_prefix();
        let mut ids = Vec::new();
        let mut piece = String::new();
        let mut start = 0;
        while start < chars {
            let mut found = None;
            for end in (start + 1..=chars).rev() {
                piece.clear();
                if start > 0 {
                    piece.push_str(prefix);
                }
                piece.push_str(&word[bounds[start]..bounds[end]]);
                if let Some(id) = self.vocab.id(&piece) {
                    found = Some((id, end));
                    break;
                }
            }
            match found {
                Some((id, end)) => {
                    ids.push(id);
                    start = end;
                }
                None => return vec![UNK_ID],
            }
        }
        ids
    }

    /// True when `word` is exactly one known vocabulary token.
    pub fn is_single_token(&self, word: &str) -> bool {
        matches!(self.encode_word(word).as_slice(), [id] if *id != UNK_ID)
    }

    /// Splits on whitespace and concatenates per-word encodings.
    pub fn encode_text(&self, text: &str) -> Vec<u32> {
        text.split_whitespace()
            .flat_map(|w| {
                if self.config.lowercase {
                    self.encode_word(&w.to_lowercase())
                } else {
                    self.encode_word(w)
                }
            })
            .collect()
    }

    /// Inverse of encoding up to normalization. `[PAD]`, `[CLS]` and `[SEP]`
    /// are dropped; continuation pieces are glued to the previous word.
    pub fn decode(&self, ids: &[u32]) -> Result<String, TokenizerError> {
        let prefix = self.vocab.continuation_prefix();
        let mut out = String::new();
        for &id in ids {
            let token = self.vocab.token(id).ok_or(TokenizerError::IdOutOfRange {
                id,
                size: self.vocab.len(),
            })?;
            if matches!(id, PAD_ID | CLS_ID | SEP_ID) {
                continue;
            }
            if self.vocab.is_continuation(id) {
                out.push_str(&token[prefix.len()..]);
            } else {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(token);
            }
        }
        Ok(out)
    }

    /// Share of words in `text` that encode without `[UNK]`.
    pub fn coverage(&self, text: &str) -> f64 {
        let mut total = 0usize;
        let mut covered = 0usize;
        for word in text.split_whitespace() {
            total += 1;
            if !self.encode_word(word).contains(&UNK_ID) {
                covered += 1;
            }
        }
        if total == 0 {
            1.0
        } else {
            covered as f64 / total as f64
        }
    }
}
