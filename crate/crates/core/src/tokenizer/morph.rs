//! Experimental finite-state suffix segmenter for agglutinative words.
//!
//! Not used by the WordPiece pipeline. A word is parsed as a lexicon stem
//! (longest first) followed by suffix transitions taken greedily, longest
//! surface form first.
//!
//! FSM file layout:
//!
//! ```text
//! [stems]
//! уй
//! [suffixes]
//! # from  suffix[=surface]  to
//! stem    да                locative
//! stem    нинг=инг          genitive
//! [cycles]
//! # epsilon edge: from  to
//! relplural stem
//! ```
//!
//! The start state is `stem`. A `suffix=surface` entry declares an elided
//! surface form: `surface` must be a tail of `suffix`, and it only applies
//! when the text already consumed ends with the elided head (so `мен` +
//! `инг` reads as `мен` + `нинг`). Every state is accepting.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::TokenizerError;

pub const START_STATE: &str = "stem";

/// FSM covering the stems and suffixes attested in the bundled examples.
pub const BUNDLED_FSM: &str = include_str!("../../data/uzbek_suffixes.fsm");

#[derive(Debug, Clone, PartialEq, Eq)]
struct Transition {
    lexical: String,
    surface: String,
    /// Head of `lexical` dropped from the surface form, if any.
    elided: String,
    to: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixFsm {
    stems: BTreeSet<String>,
    states: BTreeSet<String>,
    transitions: BTreeMap<String, Vec<Transition>>,
    epsilon: BTreeMap<String, BTreeSet<String>>,
    accepting: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morpheme {
    pub lexical: String,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphParse {
    pub morphemes: Vec<Morpheme>,
}

impl MorphParse {
    pub fn lexical(&self) -> Vec<&str> {
        self.morphemes.iter().map(|m| m.lexical.as_str()).collect()
    }

    /// Concatenated surface forms; equals the parsed word.
    pub fn surface(&self) -> String {
        self.morphemes.iter().map(|m| m.surface.as_str()).collect()
    }
}

impl SuffixFsm {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_FSM).expect("bundled FSM is well-formed")
    }

    pub fn read(path: &Path) -> Result<Self, TokenizerError> {
        let text = std::fs::read_to_string(path).map_err(|source| TokenizerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, TokenizerError> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Stems,
            Suffixes,
            Cycles,
        }
        let mut fsm = SuffixFsm {
            stems: BTreeSet::new(),
            states: BTreeSet::from([START_STATE.to_string()]),
            transitions: BTreeMap::new(),
            epsilon: BTreeMap::new(),
            accepting: BTreeSet::new(),
        };
        let mut section = Section::None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let line_no = n + 1;
            let syntax = |message: &str| TokenizerError::FsmSyntax {
                line: line_no,
                message: message.to_string(),
            };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[stems]" => section = Section::Stems,
                "[suffixes]" => section = Section::Suffixes,
                "[cycles]" => section = Section::Cycles,
                _ if line.starts_with('[') => return Err(syntax("unknown section")),
                _ => {
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    match section {
                        Section::None => return Err(syntax("entry before any section")),
                        Section::Stems => {
                            if fields.len() != 1 {
                                return Err(syntax("expected one stem per line"));
                            }
                            fsm.stems.insert(fields[0].to_string());
                        }
                        Section::Suffixes => {
                            let [from, suffix, to] = fields[..] else {
                                return Err(syntax("expected `from suffix to`"));
                            };
                            let (lexical, surface) = suffix.split_once('=').unwrap_or((suffix, suffix));
                            if surface.is_empty() || !lexical.ends_with(surface) {
                                return Err(syntax("surface form must be a non-empty tail of the suffix"));
                            }
                            let elided = lexical[..lexical.len() - surface.len()].to_string();
                            fsm.states.insert(from.to_string());
                            fsm.states.insert(to.to_string());
                            fsm.transitions
                                .entry(from.to_string())
                                .or_default()
                                .push(Transition {
                                    lexical: lexical.to_string(),
                                    surface: surface.to_string(),
                                    elided,
                                    to: to.to_string(),
                                });
                        }
                        Section::Cycles => {
                            let [from, to] = fields[..] else {
                                return Err(syntax("expected `from to`"));
                            };
                            fsm.states.insert(from.to_string());
                            fsm.states.insert(to.to_string());
                            fsm.epsilon
                                .entry(from.to_string())
                                .or_default()
                                .insert(to.to_string());
                        }
                    }
                }
            }
        }
        fsm.accepting = fsm.states.clone();
        Ok(fsm)
    }

    pub fn stems(&self) -> &BTreeSet<String> {
        &self.stems
    }

    pub fn is_accepting(&self, state: &str) -> bool {
        self.accepting.contains(state)
    }

    fn closure<'a>(&'a self, state: &'a str) -> BTreeSet<&'a str> {
        let mut seen = BTreeSet::from([state]);
        let mut stack = vec![state];
        while let Some(s) = stack.pop() {
            for next in self.epsilon.get(s).into_iter().flatten() {
                if seen.insert(next.as_str()) {
                    stack.push(next.as_str());
                }
            }
        }
        seen
    }

    /// Greedy suffix consumption from `START_STATE` after `stem`.
    fn consume(&self, word: &str, stem: &str) -> Option<MorphParse> {
        let mut morphemes = vec![Morpheme {
            lexical: stem.to_string(),
            surface: stem.to_string(),
        }];
        let mut pos = stem.len();
        let mut state = START_STATE.to_string();
        while pos < word.len() {
            let rest = &word[pos..];
            let consumed = &word[..pos];
            let best = self
                .closure(&state)
                .into_iter()
                .flat_map(|s| self.transitions.get(s).into_iter().flatten())
                .filter(|t| rest.starts_with(&t.surface) && consumed.ends_with(&t.elided))
                .max_by(|a, b| {
                    a.surface
                        .len()
                        .cmp(&b.surface.len())
                        .then_with(|| b.lexical.cmp(&a.lexical))
                        .then_with(|| b.to.cmp(&a.to))
                })?;
            morphemes.push(Morpheme {
                lexical: best.lexical.clone(),
                surface: best.surface.clone(),
            });
            pos += best.surface.len();
            state = best.to.clone();
        }
        self.closure(&state)
            .iter()
            .any(|s| self.is_accepting(s))
            .then_some(MorphParse { morphemes })
    }
}

/// Segments a normalized word into stem + suffixes, or `None` when no stem
/// leads to an accepting state exactly at the end of the word.
///
/// Stems are tried longest first; the first successful parse is returned
/// even if other stems would also parse.
pub fn segment_morph(word: &str, fsm: &SuffixFsm) -> Option<MorphParse> {
    let mut stems: Vec<&String> = fsm
        .stems
        .iter()
        .filter(|s| word.starts_with(s.as_str()))
        .collect();
    stems.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then_with(|| a.cmp(b)));
    stems.into_iter().find_map(|stem| fsm.consume(word, stem))
}
