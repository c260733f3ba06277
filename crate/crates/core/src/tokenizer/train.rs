//! WordPiece vocabulary training by likelihood-ratio pair merges.
//!
//! Every word starts as `c0 ##c1 ##c2 ...`. Each round merges the adjacent
//! symbol pair with the highest `count(pair) / (count(left) * count(right))`,
//! ties going to the lexicographically smallest merged token.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::vocab::SPECIAL_TOKENS;
use super::{TokenizerConfig, TokenizerError, Vocabulary};

type Sym = u32;

struct Word {
    symbols: Vec<Sym>,
    freq: u64,
}

#[derive(Default)]
struct Symbols {
    strings: Vec<String>,
    ids: HashMap<String, Sym>,
}

impl Symbols {
    fn intern(&mut self, s: String) -> Sym {
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let id = self.strings.len() as Sym;
        self.ids.insert(s.clone(), id);
        self.strings.push(s);
        id
    }
}

struct Counts {
    symbols: HashMap<Sym, u64>,
    pairs: HashMap<(Sym, Sym), u64>,
    pair_words: HashMap<(Sym, Sym), HashSet<usize>>,
}

impl Counts {
    fn add_word(&mut self, idx: usize, word: &Word) {
        for &s in &word.symbols {
            *self.symbols.entry(s).or_default() += word.freq;
        }
        for w in word.symbols.windows(2) {
            let pair = (w[0], w[1]);
            *self.pairs.entry(pair).or_default() += word.freq;
            self.pair_words.entry(pair).or_default().insert(idx);
        }
    }

    fn remove_word(&mut self, word: &Word) {
        for &s in &word.symbols {
            decrement(&mut self.symbols, s, word.freq);
        }
        for w in word.symbols.windows(2) {
            decrement(&mut self.pairs, (w[0], w[1]), word.freq);
        }
    }
}

fn decrement<K: std::hash::Hash + Eq>(map: &mut HashMap<K, u64>, key: K, by: u64) {
    if let Some(c) = map.get_mut(&key) {
        *c -= by;
        if *c == 0 {
            map.remove(&key);
        }
    }
}

struct Candidate {
    pair: (Sym, Sym),
    count: u64,
    denominator: u128,
    merged: String,
}

impl Candidate {
    /// Orders by score (exact rational comparison), then prefers the
    /// lexicographically smaller merged token, then the smaller left symbol.
    fn better_than(&self, other: &Candidate, symbols: &Symbols) -> bool {
        let lhs = self.count as u128 * other.denominator;
        let rhs = other.count as u128 * self.denominator;
        match lhs.cmp(&rhs) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match self.merged.cmp(&other.merged) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => {
                    symbols.strings[self.pair.0 as usize] < symbols.strings[other.pair.0 as usize]
                }
            },
        }
    }
}

/// Trains a vocabulary from a word-frequency table.
pub fn train_wordpiece(
    word_counts: &BTreeMap<String, u64>,
    config: &TokenizerConfig,
) -> Result<Vocabulary, TokenizerError> {
    config.validate()?;
    let prefix = config.continuation_prefix.as_str();
    let word_counts: Vec<(&String, u64)> = word_counts
        .iter()
        .filter(|(w, &c)| c > 0 && !w.is_empty())
        .map(|(w, &c)| (w, c))
        .collect();
    if word_counts.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }

    let alphabet: BTreeSet<char> = word_counts.iter().flat_map(|(w, _)| w.chars()).collect();
    let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    tokens.extend(alphabet.iter().map(|c| c.to_string()));
    tokens.extend(alphabet.iter().map(|c| format!("{prefix}{c}")));
    if config.vocab_size < tokens.len() {
        return Err(TokenizerError::VocabTooSmall {
            requested: config.vocab_size,
            required: tokens.len(),
        });
    }
    let mut in_vocab: HashSet<String> = tokens.iter().cloned().collect();

    let mut symbols = Symbols::default();
    let mut words: Vec<Word> = Vec::with_capacity(word_counts.len());
    for (word, freq) in &word_counts {
        if word.chars().count() > config.max_chars_per_word {
            // encodes to [UNK] regardless of the vocabulary
            continue;
        }
        let syms = word
            .chars()
            .enumerate()
            .map(|(i, c)| {
                let s = if i == 0 {
                    c.to_string()
                } else {
                    format!("{prefix}{c}")
                };
                symbols.intern(s)
            })
            .collect();
        words.push(Word {
            symbols: syms,
            freq: *freq,
        });
    }

    let mut counts = Counts {
        symbols: HashMap::new(),
        pairs: HashMap::new(),
        pair_words: HashMap::new(),
    };
    for (idx, word) in words.iter().enumerate() {
        counts.add_word(idx, word);
    }

    while tokens.len() < config.vocab_size {
        let mut best: Option<Candidate> = None;
        for (&pair, &count) in &counts.pairs {
            if count < config.min_pair_frequency {
                continue;
            }
            let denominator = counts.symbols[&pair.0] as u128 * counts.symbols[&pair.1] as u128;
            let right = &symbols.strings[pair.1 as usize];
            let merged = format!(
                "{}{}",
                symbols.strings[pair.0 as usize],
                right.strip_prefix(prefix).unwrap_or(right)
            );
            let candidate = Candidate {
                pair,
                count,
                denominator,
                merged,
            };
            if best.as_ref().is_none_or(|b| candidate.better_than(b, &symbols)) {
                best = Some(candidate);
            }
        }
        let Some(best) = best else { break };

        let merged_sym = symbols.intern(best.merged.clone());
        if in_vocab.insert(best.merged.clone()) {
            tokens.push(best.merged);
        }

        let affected: Vec<usize> = {
            let mut v: Vec<usize> = counts
                .pair_words
                .remove(&best.pair)
                .map(|s| s.into_iter().collect())
                .unwrap_or_default();
            v.sort_unstable();
            v
        };
        for idx in affected {
            let word = &words[idx];
            if !word.symbols.windows(2).any(|w| (w[0], w[1]) == best.pair) {
                continue;
            }
            counts.remove_word(word);
            let mut merged = Vec::with_capacity(word.symbols.len());
            let mut i = 0;
            while i < word.symbols.len() {
                if i + 1 < word.symbols.len() && (word.symbols[i], word.symbols[i + 1]) == best.pair {
                    merged.push(merged_sym);
                    i += 2;
                } else {
                    merged.push(word.symbols[i]);
                    i += 1;
                }
            }
            words[idx].symbols = merged;
            counts.add_word(idx, &words[idx]);
        }
        counts.pairs.remove(&best.pair);
    }

    Vocabulary::from_tokens(tokens, prefix)
}

/// Word frequencies over whitespace-delimited words.
pub fn word_frequencies<'a>(texts: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for text in texts {
        for word in text.split_whitespace() {
            *counts.entry(word.to_string()).or_insert(0) += 1;
        }
    }
    counts
}
