use rand::Rng;

use super::{apply_masking, MaskingPolicy, NspPair, TrainingError};
use crate::model::Batch;
use crate::tokenizer::build_pair_input;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltBatch {
    pub batch: Batch,
    /// Pairs dropped because one segment was empty.
    pub skipped: usize,
}

/// Packs, pads and masks a group of pairs into one batch of
/// `sequence_length`-token rows.
pub fn build_batch<'a, R: Rng + ?Sized>(
    pairs: impl IntoIterator<Item = &'a NspPair>,
    sequence_length: usize,
    policy: &MaskingPolicy,
    vocab_size: usize,
    rng: &mut R,
) -> Result<BuiltBatch, TrainingError> {
    let mut batch = Batch {
        batch_size: 0,
        seq_len: sequence_length,
        token_ids: Vec::new(),
        segment_ids: Vec::new(),
        attention_mask: Vec::new(),
        mlm_labels: Vec::new(),
        nsp_labels: Vec::new(),
    };
    let mut skipped = 0;
    for pair in pairs {
        if pair.a.is_empty() || pair.b.is_empty() {
            skipped += 1;
            continue;
        }
        let input = build_pair_input(&pair.a, &pair.b, sequence_length)?;
        let (corrupted, labels) = apply_masking(&input.token_ids, policy, vocab_size, rng);
        batch.token_ids.extend(corrupted);
        batch.segment_ids.extend(input.segment_ids);
        batch.attention_mask.extend(input.attention_mask);
        batch.mlm_labels.extend(labels);
        batch.nsp_labels.push(Some(u32::from(pair.is_next)));
        batch.batch_size += 1;
    }
    Ok(BuiltBatch { batch, skipped })
}
