use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::TokenizerError;

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;
pub const MASK_ID: u32 = 4;
pub const NUM_SPECIAL: u32 = 5;

pub const SPECIAL_TOKENS: [&str; NUM_SPECIAL as usize] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"];

pub const DEFAULT_CONTINUATION_PREFIX: &str = "##";

/// Ordered token list; the position of a token is its id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    continuation_prefix: String,
}

impl Vocabulary {
    /// Builds a vocabulary, checking the special-token layout and uniqueness.
    pub fn from_tokens(
        tokens: Vec<String>,
        continuation_prefix: impl Into<String>,
    ) -> Result<Self, TokenizerError> {
        for (id, expected) in SPECIAL_TOKENS.iter().enumerate() {
            match tokens.get(id) {
                Some(t) if t == expected => {}
                found => {
                    return Err(TokenizerError::SpecialLayout {
                        id: id as u32,
                        expected: expected.to_string(),
                        found: found.cloned().unwrap_or_default(),
                    })
                }
            }
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(TokenizerError::EmptyToken { id: id as u32 });
            }
            if index.insert(token.clone(), id as u32).is_some() {
                return Err(TokenizerError::DuplicateToken(token.clone()));
            }
        }
        Ok(Self {
            tokens,
            index,
            continuation_prefix: continuation_prefix.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn continuation_prefix(&self) -> &str {
        &self.continuation_prefix
    }

    pub fn is_special(&self, id: u32) -> bool {
        id < NUM_SPECIAL
    }

    pub fn is_continuation(&self, id: u32) -> bool {
        self.token(id).is_some_and(|t| {
            t.starts_with(&self.continuation_prefix) && t.len() > self.continuation_prefix.len()
        })
    }

    /// A token that can start a word: neither special nor a continuation.
    pub fn is_word_initial(&self, id: u32) -> bool {
        !self.is_special(id) && !self.is_continuation(id) && (id as usize) < self.len()
    }

    /// One token per line; optional leading `#` comment lines form a header.
    pub fn to_file_string(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        for token in &self.tokens {
            out.push_str(token);
            out.push('\n');
        }
        out
    }

    /// Parses the vocab file layout. Header comment lines before `[PAD]` are
    /// skipped; after the header, line `i` holds token id `i`.
    pub fn parse(text: &str, continuation_prefix: &str) -> Result<Self, TokenizerError> {
        let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).peekable();
        while let Some(line) = lines.peek() {
            if line.starts_with('#') && *line != SPECIAL_TOKENS[0] {
                lines.next();
            } else {
                break;
            }
        }
        let tokens: Vec<String> = lines.map(str::to_string).collect();
        Self::from_tokens(tokens, continuation_prefix)
    }

    pub fn read(path: &Path, continuation_prefix: &str) -> Result<Self, TokenizerError> {
        let text = fs::read_to_string(path).map_err(|source| TokenizerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, continuation_prefix)
    }

    pub fn write(&self, path: &Path, header: &[String]) -> Result<(), TokenizerError> {
        fs::write(path, self.to_file_string(header)).map_err(|source| TokenizerError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
