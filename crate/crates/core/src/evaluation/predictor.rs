use std::cmp::Ordering;

use rand::seq::index::sample;

use super::MaskablePolicy;
use crate::model::{Batch, EncoderState};
use crate::rng::{self, tag};
use crate::tokenizer::{WordPiece, CLS_ID, MASK_ID, SEP_ID};
use crate::Scalar;

/// Anything that can fill a masked word.
pub trait Predictor: Sync {
    fn name(&self) -> &str;

    /// Up to `k` candidate words for `words[masked_index]`, best first.
    /// `None` means the predictor cannot score this gold word and the
    /// sequence is skipped. Must be deterministic for fixed inputs.
    fn predict(&self, words: &[String], masked_index: usize, k: usize) -> Option<Vec<String>>;
}

/// Always ranks the gold word first.
#[derive(Debug, Clone, Default)]
pub struct OraclePredictor;

impl Predictor for OraclePredictor {
    fn name(&self) -> &str {
        "oracle"
    }

    fn predict(&self, words: &[String], masked_index: usize, _k: usize) -> Option<Vec<String>> {
        Some(vec![words[masked_index].clone()])
    }
}

/// Never suggests the gold word.
#[derive(Debug, Clone, Default)]
pub struct AdversarialPredictor;

impl Predictor for AdversarialPredictor {
    fn name(&self) -> &str {
        "adversarial"
    }

    fn predict(&self, words: &[String], masked_index: usize, k: usize) -> Option<Vec<String>> {
        let gold = &words[masked_index];
        Some(
            (0..)
                .map(|i| format!("<not-{i}>"))
                .filter(|w| w != gold)
                .take(k)
                .collect(),
        )
    }
}

/// Draws `k` distinct words uniformly from a fixed list, seeded by the input.
#[derive(Debug, Clone)]
pub struct UniformPredictor {
    pub words: Vec<String>,
    pub seed: u64,
}

fn fnv1a(words: &[String], masked_index: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    };
    for w in words {
        w.bytes().for_each(&mut eat);
        eat(b' ');
    }
    masked_index.to_le_bytes().into_iter().for_each(eat);
    h
}

impl Predictor for UniformPredictor {
    fn name(&self) -> &str {
        "uniform"
    }

    fn predict(&self, words: &[String], masked_index: usize, k: usize) -> Option<Vec<String>> {
        let mut r = rng::stream(&[tag::FIXTURE, self.seed, fnv1a(words, masked_index)]);
        let k = k.min(self.words.len());
        Some(
            sample(&mut r, self.words.len(), k)
                .into_iter()
                .map(|i| self.words[i].clone())
                .collect(),
        )
    }
}

/// Keeps `budget` tokens of `len` around `center`, as evenly as the edges allow.
fn centered_range(len: usize, center: usize, budget: usize) -> (usize, usize) {
    if len <= budget {
        return (0, len);
    }
    let start = center.saturating_sub(budget / 2).min(len - budget);
    (start, start + budget)
}

fn ranked_ids<T: Scalar>(logits: &[T], keep: impl Fn(u32) -> bool) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..logits.len() as u32).filter(|&id| keep(id)).collect();
    ids.sort_by(|&a, &b| {
        logits[b as usize]
            .partial_cmp(&logits[a as usize])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    ids
}

/// Ranks vocabulary words for the masked slot with an eval-mode forward pass.
///
/// The window is encoded as `[CLS] pieces… [SEP]` with the gold word replaced
/// by `[MASK]` (one per gold piece under [`MaskablePolicy::AllWords`]), and cut
/// symmetrically around the mask when it exceeds `max_positions`. Special and
/// continuation tokens are never suggested. Under the single-token policy a
/// gold word that is not one known token returns `None`; under all-words a
/// multi-piece gold word yields the single jointly decoded word.
pub fn predict_topk_wordpiece<T: Scalar>(
    state: &EncoderState<T>,
    tokenizer: &WordPiece,
    policy: MaskablePolicy,
    words: &[String],
    masked_index: usize,
    k: usize,
) -> Option<Vec<String>> {
    let gold_pieces = tokenizer.encode_word(&words[masked_index]);
    if policy == MaskablePolicy::SingleTokenWordsOnly && !tokenizer.is_single_token(&words[masked_index]) {
        return None;
    }
    let n_masks = gold_pieces.len().max(1);
    let mut tokens = Vec::new();
    let mut mask_at = 0;
    for (i, w) in words.iter().enumerate() {
        if i == masked_index {
            mask_at = tokens.len();
            tokens.extend(std::iter::repeat_n(MASK_ID, n_masks));
        } else {
            tokens.extend(tokenizer.encode_word(w));
        }
    }
    let budget = state.config.max_positions.saturating_sub(2);
    if budget < n_masks {
        return None;
    }
    let (start, end) = centered_range(tokens.len(), mask_at + n_masks / 2, budget);
    let (start, end) = if mask_at < start || mask_at + n_masks > end {
        // keep every mask inside the cut
        let s = (mask_at + n_masks).saturating_sub(budget).min(mask_at);
        (s, (s + budget).min(tokens.len()))
    } else {
        (start, end)
    };
    let mut row = Vec::with_capacity(end - start + 2);
    row.push(CLS_ID);
    row.extend_from_slice(&tokens[start..end]);
    row.push(SEP_ID);
    let first = 1 + mask_at - start;
    let batch = Batch::from_rows(&[row.clone()], &[vec![0; row.len()]]);
    let positions: Vec<(usize, usize)> = (0..n_masks).map(|j| (0, first + j)).collect();
    let logits = state.mlm_logits_at(&batch, &positions).ok()?;
    let vocab = tokenizer.vocab();
    let initial = ranked_ids(&logits[0], |id| vocab.is_word_initial(id));
    if n_masks == 1 {
        return Some(
            initial
                .into_iter()
                .take(k)
                .filter_map(|id| vocab.token(id).map(str::to_string))
                .collect(),
        );
    }
    let mut ids = vec![*initial.first()?];
    for l in &logits[1..] {
        ids.push(*ranked_ids(l, |id| vocab.is_continuation(id)).first()?);
    }
    Some(vec![tokenizer.decode(&ids).ok()?])
}

/// A trained encoder and its tokenizer behind the [`Predictor`] interface.
#[derive(Debug, Clone)]
pub struct CheckpointPredictor<T> {
    pub name: String,
    pub state: EncoderState<T>,
    pub tokenizer: WordPiece,
    pub policy: MaskablePolicy,
}

impl<T: Scalar> Predictor for CheckpointPredictor<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, words: &[String], masked_index: usize, k: usize) -> Option<Vec<String>> {
        predict_topk_wordpiece(&self.state, &self.tokenizer, self.policy, words, masked_index, k)
    }
}
