use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TrainingError;
use crate::tokenizer::{MASK_ID, NUM_SPECIAL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskingPolicy {
    pub select_rate: f64,
    pub mask_fraction: f64,
    pub random_fraction: f64,
    pub keep_fraction: f64,
}

impl Default for MaskingPolicy {
    fn default() -> Self {
        Self {
            select_rate: 0.15,
            mask_fraction: 0.8,
            random_fraction: 0.1,
            keep_fraction: 0.1,
        }
    }
}

impl MaskingPolicy {
    pub fn validate(&self) -> Result<(), TrainingError> {
        let fractions = [self.mask_fraction, self.random_fraction, self.keep_fraction];
        if !(0.0..=1.0).contains(&self.select_rate) || fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(TrainingError::InvalidConfig(
                "masking rates must lie in [0, 1]".into(),
            ));
        }
        if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(TrainingError::InvalidConfig(
                "mask_fraction + random_fraction + keep_fraction must equal 1".into(),
            ));
        }
        Ok(())
    }
}

/// Corrupts a packed sequence for MLM. Ids below `NUM_SPECIAL` (including
/// `[UNK]`) are never selected, and random replacements are drawn from
/// `NUM_SPECIAL..vocab_size`.
///
/// Each position consumes one draw for selection, so the stream stays aligned
/// across positions regardless of which are special.
pub fn apply_masking<R: Rng + ?Sized>(
    ids: &[u32],
    policy: &MaskingPolicy,
    vocab_size: usize,
    rng: &mut R,
) -> (Vec<u32>, Vec<Option<u32>>) {
    let mut corrupted = ids.to_vec();
    let mut labels = vec![None; ids.len()];
    for (i, &id) in ids.iter().enumerate() {
        let draw: f64 = rng.random();
        if id < NUM_SPECIAL || draw >= policy.select_rate {
            continue;
        }
        labels[i] = Some(id);
        let action: f64 = rng.random();
        if action < policy.mask_fraction {
            corrupted[i] = MASK_ID;
        } else if action < policy.mask_fraction + policy.random_fraction {
            corrupted[i] = rng.random_range(NUM_SPECIAL..vocab_size as u32);
        }
    }
    (corrupted, labels)
}
