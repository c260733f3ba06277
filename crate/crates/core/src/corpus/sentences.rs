use std::collections::BTreeSet;

use super::{normalize_text, Document, SentenceDocument};

/// Set of normalized abbreviation tokens, each including its trailing period.
pub type Abbreviations = BTreeSet<String>;

/// `ш.` (шаҳар, city) and `й.` (йил, year).
pub fn default_abbreviations() -> Abbreviations {
    ["ш.", "й."].into_iter().map(String::from).collect()
}

fn ends_sentence(word: &str, abbreviations: &Abbreviations) -> bool {
    match word.chars().last() {
        Some('!') | Some('?') => true,
        Some('.') => !abbreviations.contains(word),
        _ => false,
    }
}

/// Splits a normalized document at `.`, `!` or `?` followed by whitespace.
///
/// A word ending in `.` that is listed in `abbreviations` does not end a
/// sentence. Text without any terminator yields a single sentence.
pub fn split_sentences(doc: &Document, abbreviations: &Abbreviations) -> SentenceDocument {
    let mut sentences = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for word in doc.text.split_whitespace() {
        current.push(word);
        if ends_sentence(word, abbreviations) {
            sentences.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        sentences.push(current.join(" "));
    }
    SentenceDocument {
        id: doc.id.clone(),
        sentences,
    }
}

/// Normalizes abbreviation entries the same way document text is normalized.
pub(crate) fn normalize_abbreviations<'a>(entries: impl IntoIterator<Item = &'a str>) -> Abbreviations {
    entries
        .into_iter()
        .map(normalize_text)
        .filter(|e| !e.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(text: &str) -> Document {
        Document::new("d", text, "test")
    }

    /// Character-level reference scanner: a sentence boundary is a
    /// terminator character immediately followed by whitespace, unless the
    /// characters since the previous whitespace form a listed abbreviation.
    fn reference_split(text: &str, abbreviations: &Abbreviations) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut start = 0;
        for i in 0..chars.len() {
            let c = chars[i];
            let followed_by_space = chars.get(i + 1).is_some_and(|n| n.is_whitespace());
            if !matches!(c, '.' | '!' | '?') || !followed_by_space {
                continue;
            }
            if c == '.' {
                let mut w = i;
                while w > 0 && !chars[w - 1].is_whitespace() {
                    w -= 1;
                }
                let word: String = chars[w..=i].iter().collect();
                if abbreviations.contains(&word) {
                    continue;
                }
            }
            let s: String = chars[start..=i].iter().collect();
            out.push(s.trim().to_string());
            start = i + 1;
        }
        let rest: String = chars[start..].iter().collect();
        if !rest.trim().is_empty() {
            out.push(rest.trim().to_string());
        }
        out
    }

    #[test]
    fn two_plain_sentences() {
        let s = split_sentences(&doc("бу уй. бу боғ."), &default_abbreviations());
        assert_eq!(s.sentences, vec!["бу уй.", "бу боғ."]);
    }

    #[test]
    fn abbreviation_does_not_split() {
        let s = split_sentences(&doc("тошкент ш. марказида жойлашган."), &default_abbreviations());
        assert_eq!(s.sentences, vec!["тошкент ш. марказида жойлашган."]);
    }

    #[test]
    fn punctuation_cluster() {
        let abbreviations = default_abbreviations();
        let text = "қани?! кетдик.";
        let s = split_sentences(&doc(text), &abbreviations);
        assert_eq!(s.sentences, reference_split(text, &abbreviations));
        assert_eq!(s.sentences, vec!["қани?!", "кетдик."]);
    }

    #[test]
    fn no_terminator_is_one_sentence() {
        let s = split_sentences(&doc("бу уй"), &default_abbreviations());
        assert_eq!(s.sentences, vec!["бу уй"]);
    }

    #[test]
    fn empty_document_has_no_sentences() {
        let s = split_sentences(&doc(""), &default_abbreviations());
        assert!(s.sentences.is_empty());
    }

    proptest! {
        #[test]
        fn agrees_with_reference_scan(words in proptest::collection::vec("(ш\\.|й\\.|[а-г]{1,3}[.!?]{0,2})", 0..20)) {
            let text = words.join(" ");
            let abbreviations = default_abbreviations();
            let s = split_sentences(&doc(&text), &abbreviations);
            prop_assert_eq!(s.sentences, reference_split(&text, &abbreviations));
        }

        #[test]
        fn preserves_content(raw in "[ а-вш.!?й]{0,60}") {
            let text = normalize_text(&raw);
            let s = split_sentences(&doc(&text), &default_abbreviations());
            prop_assert!(s.sentences.iter().all(|x| !x.trim().is_empty()));
            prop_assert_eq!(normalize_text(&s.sentences.join(" ")), text);
        }
    }
}
