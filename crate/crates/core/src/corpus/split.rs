use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Document};
use crate::rng;

/// Whitespace-delimited word count, matching `wc -w` on normalized text.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub validation_fraction: f64,
    pub rng_seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        // ~2M of ~142M words held out
        Self {
            validation_fraction: 0.014,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStats {
    pub document_count: usize,
    pub word_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub document_count: usize,
    pub word_count: usize,
    pub per_source: BTreeMap<String, SourceStats>,
}

/// Counts documents and words; documents with no words are not counted.
pub fn corpus_stats(docs: &[Document]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for doc in docs {
        let words = doc.word_count();
        if words == 0 {
            continue;
        }
        stats.document_count += 1;
        stats.word_count += words;
        let source = stats.per_source.entry(doc.source_tag.clone()).or_default();
        source.document_count += 1;
        source.word_count += words;
    }
    stats
}

/// Partitions documents into `(train, validation)`.
///
/// Documents are sorted by id, shuffled with `spec.rng_seed`, and then taken
/// into the validation set greedily while that brings its word share closer
/// to the requested fraction.
/// The result is independent of the input order.
pub fn split_corpus(
    docs: Vec<Document>,
    spec: &SplitSpec,
) -> Result<(Vec<Document>, Vec<Document>), CorpusError> {
    if !(0.0..1.0).contains(&spec.validation_fraction) {
        return Err(CorpusError::InvalidFraction(spec.validation_fraction));
    }
    if docs.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut seen = HashSet::with_capacity(docs.len());
    for doc in &docs {
        if !seen.insert(doc.id.as_str()) {
            return Err(CorpusError::DuplicateId(doc.id.clone()));
        }
    }

    let mut docs = docs;
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    let mut stream = rng::stream(&[rng::tag::SPLIT, spec.rng_seed]);
    docs.shuffle(&mut stream);

    let total: usize = docs.iter().map(Document::word_count).sum();
    let target = spec.validation_fraction * total as f64;
    let mut validation = Vec::new();
    let mut train = Vec::new();
    let mut held_out = 0usize;
    for doc in docs {
        let words = doc.word_count();
        // take the document only if it moves the held-out share closer to the target
        if ((held_out + words) as f64 - target).abs() < (held_out as f64 - target).abs() {
            held_out += words;
            validation.push(doc);
        } else {
            train.push(doc);
        }
    }
    Ok((train, validation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn docs_of_lengths(lengths: &[usize]) -> Vec<Document> {
        lengths
            .iter()
            .enumerate()
            .map(|(i, &n)| Document::new(format!("doc-{i:04}"), vec!["сўз"; n].join(" "), "news"))
            .collect()
    }

    /// Independent counter: counts transitions from whitespace to non-whitespace.
    fn reference_word_count(text: &str) -> usize {
        let mut count = 0;
        let mut in_word = false;
        for ch in text.chars() {
            if ch.is_whitespace() {
                in_word = false;
            } else if !in_word {
                in_word = true;
                count += 1;
            }
        }
        count
    }

    #[test]
    fn stats_examples() {
        let one = vec![Document::new("a", "бу уй", "news")];
        assert_eq!(corpus_stats(&one).word_count, 2);

        let empty = vec![Document::new("a", "", "news")];
        assert_eq!(corpus_stats(&empty).document_count, 0);

        let three = docs_of_lengths(&[4, 5, 6]);
        let stats = corpus_stats(&three);
        assert_eq!(stats.word_count, 4 + 5 + 6);
        assert_eq!(stats.per_source["news"].document_count, 3);
    }

    #[test]
    fn zero_fraction_keeps_everything_for_training() {
        let spec = SplitSpec {
            validation_fraction: 0.0,
            rng_seed: 3,
        };
        let (train, val) = split_corpus(docs_of_lengths(&[10; 100]), &spec).unwrap();
        assert_eq!((train.len(), val.len()), (100, 0));
    }

    #[test]
    fn fixed_seed_gives_same_validation_docs() {
        let spec = SplitSpec {
            validation_fraction: 0.2,
            rng_seed: 11,
        };
        let (_, a) = split_corpus(docs_of_lengths(&[7; 10]), &spec).unwrap();
        let (_, b) = split_corpus(docs_of_lengths(&[7; 10]), &spec).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a, b);
    }

    #[test]
    fn input_order_does_not_matter() {
        let spec = SplitSpec {
            validation_fraction: 0.3,
            rng_seed: 5,
        };
        let docs = docs_of_lengths(&[3, 9, 4, 12, 8, 1, 6, 2]);
        let mut reversed = docs.clone();
        reversed.reverse();
        assert_eq!(
            split_corpus(docs, &spec).unwrap(),
            split_corpus(reversed, &spec).unwrap()
        );
    }

    #[test]
    fn errors() {
        let spec = SplitSpec::default();
        assert!(matches!(split_corpus(vec![], &spec), Err(CorpusError::Empty)));
        let bad = SplitSpec {
            validation_fraction: 1.0,
            rng_seed: 0,
        };
        assert!(matches!(
            split_corpus(docs_of_lengths(&[1]), &bad),
            Err(CorpusError::InvalidFraction(_))
        ));
        let mut dup = docs_of_lengths(&[1, 2]);
        dup[1].id = dup[0].id.clone();
        assert!(matches!(
            split_corpus(dup, &spec),
            Err(CorpusError::DuplicateId(_))
        ));
    }

    #[test]
    fn word_counts_match_reference_on_random_strings() {
        use rand::{Rng, SeedableRng};
        let alphabet: Vec<char> = "аб уй\t\n\r\u{00a0}\u{2003}x.,!".chars().collect();
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let len = r.random_range(0..40);
            let s: String = (0..len)
                .map(|_| alphabet[r.random_range(0..alphabet.len())])
                .collect();
            assert_eq!(word_count(&s), reference_word_count(&s), "{s:?}");
        }
    }

    proptest! {
        #[test]
        fn split_is_a_partition(
            lengths in proptest::collection::vec(1usize..50, 1..60),
            fraction in 0.0f64..0.9,
            seed in any::<u64>(),
        ) {
            let docs = docs_of_lengths(&lengths);
            let total: usize = lengths.iter().sum();
            let spec = SplitSpec { validation_fraction: fraction, rng_seed: seed };
            let (train, val) = split_corpus(docs.clone(), &spec).unwrap();
            prop_assert_eq!(train.len() + val.len(), docs.len());
            let mut ids: Vec<_> = train.iter().chain(&val).map(|d| d.id.clone()).collect();
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), docs.len());
            let words: usize = train.iter().chain(&val).map(Document::word_count).sum();
            prop_assert_eq!(words, total);
        }

        #[test]
        fn validation_share_is_close_for_large_corpora(
            lengths in proptest::collection::vec(20usize..40, 100..200),
            fraction in 0.05f64..0.5,
            seed in any::<u64>(),
        ) {
            let docs = docs_of_lengths(&lengths);
            let total: usize = lengths.iter().sum();
            let spec = SplitSpec { validation_fraction: fraction, rng_seed: seed };
            let (_, val) = split_corpus(docs, &spec).unwrap();
            let share = val.iter().map(Document::word_count).sum::<usize>() as f64 / total as f64;
            prop_assert!((share - fraction).abs() <= 0.25 * fraction, "share {share} fraction {fraction}");
        }
    }
}
