//! On-disk corpus layout: one sentence per line, documents separated by a
//! single blank line. Abbreviation lists: one entry per line, `#` comments.

use std::fs;
use std::path::Path;

use super::sentences::normalize_abbreviations;
use super::{Abbreviations, CorpusError, SentenceDocument};

/// Parses the corpus layout. Windows line endings and repeated blank lines
/// are tolerated. Documents get ids `doc-000000`, `doc-000001`, ...
pub fn parse_corpus(text: &str) -> Vec<SentenceDocument> {
    let mut docs = Vec::new();
    let mut current = Vec::new();
    let flush = |current: &mut Vec<String>, docs: &mut Vec<SentenceDocument>| {
        if !current.is_empty() {
            docs.push(SentenceDocument {
                id: format!("doc-{:06}", docs.len()),
                sentences: std::mem::take(current),
            });
        }
    };
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut current, &mut docs);
        } else {
            current.push(line.trim().to_string());
        }
    }
    flush(&mut current, &mut docs);
    docs
}

pub fn format_corpus(docs: &[SentenceDocument]) -> String {
    let mut out = String::new();
    for (i, doc) in docs.iter().filter(|d| !d.sentences.is_empty()).enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for sentence in &doc.sentences {
            out.push_str(sentence);
            out.push('\n');
        }
    }
    out
}

fn io_error(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_corpus(path: &Path) -> Result<Vec<SentenceDocument>, CorpusError> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CorpusError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    Ok(parse_corpus(text))
}

pub fn write_corpus(path: &Path, docs: &[SentenceDocument]) -> Result<(), CorpusError> {
    fs::write(path, format_corpus(docs)).map_err(|e| io_error(path, e))
}

pub fn parse_abbreviations(text: &str) -> Abbreviations {
    normalize_abbreviations(
        text.lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#')),
    )
}

pub fn read_abbreviations(path: &Path) -> Result<Abbreviations, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    Ok(parse_abbreviations(&text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documents_and_crlf() {
        let text = "бу уй.\r\nбу боғ.\r\n\r\nикки.\r\n";
        let docs = parse_corpus(text);
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].sentences, vec!["бу уй.", "бу боғ."]);
        assert_eq!(docs[1].sentences, vec!["икки."]);
    }

    #[test]
    fn format_then_parse_is_stable() {
        let docs = parse_corpus("а.\nб.\n\n\n\nв.\n");
        let text = format_corpus(&docs);
        assert_eq!(text, "а.\nб.\n\nв.\n");
        assert_eq!(parse_corpus(&text), docs);
    }

    #[test]
    fn abbreviations_skip_comments_and_normalize() {
        let a = parse_abbreviations("# city\nШ.\n\n  й. \n#x\nт.\n");
        assert_eq!(a.into_iter().collect::<Vec<_>>(), vec!["й.", "т.", "ш."]);
    }
}
