use super::{ModelConfig, ModelError};

/// Row-major `[batch_size, seq_len]` inputs and labels.
///
/// `None` is the ignore marker for both label kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub batch_size: usize,
    pub seq_len: usize,
    pub token_ids: Vec<u32>,
    pub segment_ids: Vec<u32>,
    pub attention_mask: Vec<u32>,
    pub mlm_labels: Vec<Option<u32>>,
    pub nsp_labels: Vec<Option<u32>>,
}

impl Batch {
    /// A batch of unpadded, unlabeled rows of equal length.
    pub fn from_rows(token_ids: &[Vec<u32>], segment_ids: &[Vec<u32>]) -> Self {
        let batch_size = token_ids.len();
        let seq_len = token_ids.first().map_or(0, |r| r.len());
        let n = batch_size * seq_len;
        Self {
            batch_size,
            seq_len,
            token_ids: token_ids.concat(),
            segment_ids: segment_ids.concat(),
            attention_mask: vec![1; n],
            mlm_labels: vec![None; n],
            nsp_labels: vec![None; batch_size],
        }
    }

    pub fn tokens(&self, example: usize) -> &[u32] {
        &self.token_ids[example * self.seq_len..(example + 1) * self.seq_len]
    }

    pub fn segments(&self, example: usize) -> &[u32] {
        &self.segment_ids[example * self.seq_len..(example + 1) * self.seq_len]
    }

    pub fn mask(&self, example: usize) -> &[u32] {
        &self.attention_mask[example * self.seq_len..(example + 1) * self.seq_len]
    }

    pub fn labels(&self, example: usize) -> &[Option<u32>] {
        &self.mlm_labels[example * self.seq_len..(example + 1) * self.seq_len]
    }

    pub fn num_mlm_labels(&self) -> usize {
        self.mlm_labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn num_nsp_labels(&self) -> usize {
        self.nsp_labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn validate(&self, config: &ModelConfig) -> Result<(), ModelError> {
        let n = self.batch_size * self.seq_len;
        let shape = |m: String| Err(ModelError::BatchShape(m));
        if self.token_ids.len() != n
            || self.segment_ids.len() != n
            || self.attention_mask.len() != n
            || self.mlm_labels.len() != n
        {
            return shape(format!("per-token arrays must have {n} entries"));
        }
        if self.nsp_labels.len() != self.batch_size {
            return shape(format!("nsp_labels must have {} entries", self.batch_size));
        }
        if self.seq_len > config.max_positions {
            return Err(ModelError::SequenceTooLong {
                len: self.seq_len,
                max: config.max_positions,
            });
        }
        for &id in self.token_ids.iter().chain(self.mlm_labels.iter().flatten()) {
            if id as usize >= config.vocab_size {
                return Err(ModelError::TokenOutOfRange {
                    id,
                    vocab: config.vocab_size,
                });
            }
        }
        if let Some(&s) = self
            .segment_ids
            .iter()
            .find(|&&s| s as usize >= config.segment_types)
        {
            return shape(format!(
                "segment id {s} >= segment_types {}",
                config.segment_types
            ));
        }
        if self.attention_mask.iter().any(|&m| m > 1) {
            return shape("attention_mask must be 0 or 1".into());
        }
        if self
            .attention_mask
            .iter()
            .zip(&self.mlm_labels)
            .any(|(&m, l)| m == 0 && l.is_some())
        {
            return shape("padded position carries an MLM label".into());
        }
        if self.nsp_labels.iter().flatten().any(|&l| l > 1) {
            return shape("nsp label must be 0 or 1".into());
        }
        Ok(())
    }
}
