use unicode_normalization::UnicodeNormalization;

use super::CorpusError;

/// Canonicalizes raw text for vocabulary lookups.
///
/// NFC, full Unicode lowercase, control characters removed, whitespace runs
/// collapsed to one ASCII space and trimmed. Letters such as `ў`, `қ`, `ғ`
/// and `ҳ` are kept as-is: no accent stripping.
pub fn normalize_text(raw: &str) -> String {
    let lowered: String = raw.nfc().collect::<String>().to_lowercase();
    // Lowercasing may introduce decomposed sequences; recompose.
    let recomposed: String = lowered.nfc().collect();

    let mut out = String::with_capacity(recomposed.len());
    let mut pending_space = false;
    for ch in recomposed.chars() {
        if ch.is_whitespace() {
            pending_space = true;
        } else if ch.is_control() {
            continue;
        } else {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(ch);
        }
    }
    out
}

/// Like [`normalize_text`] but validates UTF-8 first.
pub fn normalize_bytes(raw: &[u8]) -> Result<String, CorpusError> {
    match std::str::from_utf8(raw) {
        Ok(text) => Ok(normalize_text(text)),
        Err(err) => Err(CorpusError::InvalidUtf8 {
            offset: err.valid_up_to(),
        }),
    }
}
