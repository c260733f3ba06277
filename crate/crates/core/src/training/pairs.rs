use rand::Rng;

use super::TrainingError;
use crate::corpus::SentenceDocument;
use crate::tokenizer::WordPiece;

/// A document as a list of tokenized, non-empty sentences.
pub type TokenizedDoc = Vec<Vec<u32>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NspPair {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub is_next: bool,
}

/// Tokenizes every sentence, dropping empty sentences and empty documents.
pub fn tokenize_documents(docs: &[SentenceDocument], tokenizer: &WordPiece) -> Vec<TokenizedDoc> {
    docs.iter()
        .map(|d| {
            d.sentences
                .iter()
                .map(|s| tokenizer.encode_text(s))
                .filter(|ids| !ids.is_empty())
                .collect::<TokenizedDoc>()
        })
        .filter(|d| !d.is_empty())
        .collect()
}

struct PairSampler<'a> {
    docs: &'a [TokenizedDoc],
    /// `(doc, sentence)` starts that have a following sentence.
    positive_starts: Vec<(usize, usize)>,
    all_starts: Vec<(usize, usize)>,
}

impl<'a> PairSampler<'a> {
    fn new(docs: &'a [TokenizedDoc], positive_rate: f64) -> Result<Self, TrainingError> {
        let mut positive_starts = Vec::new();
        let mut all_starts = Vec::new();
        for (d, doc) in docs.iter().enumerate() {
            for i in 0..doc.len() {
                all_starts.push((d, i));
                if i + 1 < doc.len() {
                    positive_starts.push((d, i));
                }
            }
        }
        if positive_rate > 0.0 && positive_starts.is_empty() {
            return Err(TrainingError::InsufficientCorpus(
                "positive pairs need a document with at least two sentences".into(),
            ));
        }
        if positive_rate < 1.0 && docs.len() < 2 {
            return Err(TrainingError::InsufficientCorpus(
                "negative pairs need at least two non-empty documents".into(),
            ));
        }
        Ok(Self {
            docs,
            positive_starts,
            all_starts,
        })
    }

    /// Last sentence index of a run starting at `start`. The run takes at
    /// least `min_len` sentences (document permitting), then keeps growing
    /// while the next sentence still fits in `target` tokens.
    fn run_end(&self, doc: usize, start: usize, target: usize, min_len: usize) -> usize {
        let sentences = &self.docs[doc];
        let mut end = start;
        let mut total = sentences[start].len();
        while end + 1 < sentences.len()
            && (end + 1 - start < min_len || total + sentences[end + 1].len() <= target)
        {
            end += 1;
            total += sentences[end].len();
        }
        end
    }

    fn concat(&self, doc: usize, from: usize, to_inclusive: usize) -> Vec<u32> {
        self.docs[doc][from..=to_inclusive].concat()
    }

    /// Draws a pair. With `start`, segment `a` begins at that sentence (one
    /// earlier for a positive pair starting at a document's last sentence).
    fn sample<R: Rng + ?Sized>(
        &self,
        start: Option<(usize, usize)>,
        sequence_length: usize,
        positive_rate: f64,
        rng: &mut R,
    ) -> NspPair {
        let budget = sequence_length.saturating_sub(3).max(2);
        let is_next = rng.random::<f64>() < positive_rate;
        if is_next {
            let (d, i) = match start {
                Some((d, i)) if self.docs[d].len() >= 2 => (d, i.min(self.docs[d].len() - 2)),
                _ => self.positive_starts[rng.random_range(0..self.positive_starts.len())],
            };
            let end = self.run_end(d, i, budget, 2);
            let split = rng.random_range(i + 1..=end);
            NspPair {
                a: self.concat(d, i, split - 1),
                b: self.concat(d, split, end),
                is_next,
            }
        } else {
            let (d, i) = start.unwrap_or_else(|| self.all_starts[rng.random_range(0..self.all_starts.len())]);
            let a_end = self.run_end(d, i, budget / 2, 1);
            let a = self.concat(d, i, a_end);
            let mut other = rng.random_range(0..self.docs.len() - 1);
            if other >= d {
                other += 1;
            }
            let j = rng.random_range(0..self.docs[other].len());
            let b_end = self.run_end(other, j, budget.saturating_sub(a.len()), 1);
            NspPair {
                a,
                b: self.concat(other, j, b_end),
                is_next,
            }
        }
    }
}

/// Draws one NSP pair. Positive pairs are a contiguous sentence run split at
/// a random sentence boundary; negative pairs take `b` from another document.
/// Runs grow by whole sentences while they fit in `sequence_length - 3`
/// tokens; only a run forced past the budget is truncated later.
pub fn sample_nsp_pair<R: Rng + ?Sized>(
    docs: &[TokenizedDoc],
    sequence_length: usize,
    positive_rate: f64,
    rng: &mut R,
) -> Result<NspPair, TrainingError> {
    Ok(PairSampler::new(docs, positive_rate)?.sample(None, sequence_length, positive_rate, rng))
}

/// Draws `count` pairs whose `a` segments sweep the corpus: pair `j` starts
/// at sentence `j mod (total sentences)`, so every sentence opens a pair
/// once `count` reaches the sentence total.
pub fn generate_pairs<R: Rng + ?Sized>(
    docs: &[TokenizedDoc],
    count: usize,
    sequence_length: usize,
    positive_rate: f64,
    rng: &mut R,
) -> Result<Vec<NspPair>, TrainingError> {
    let sampler = PairSampler::new(docs, positive_rate)?;
    Ok((0..count)
        .map(|j| {
            let start = sampler.all_starts[j % sampler.all_starts.len()];
            sampler.sample(Some(start), sequence_length, positive_rate, rng)
        })
        .collect())
}
