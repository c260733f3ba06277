use serde::{Deserialize, Serialize};

use super::{Batch, ForwardOutput, ModelError};
use crate::Scalar;

/// Batch loss with the counts needed to merge batches into epoch means.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub total: f64,
    /// Mean cross-entropy over labeled MLM positions (0 when there are none).
    pub mlm: f64,
    /// Mean cross-entropy over labeled NSP examples (0 when there are none).
    pub nsp: f64,
    pub mlm_count: usize,
    pub mlm_correct: usize,
    pub nsp_count: usize,
    pub nsp_correct: usize,
}

impl LossValue {
    pub fn mlm_accuracy(&self) -> f64 {
        ratio(self.mlm_correct, self.mlm_count)
    }

    pub fn nsp_accuracy(&self) -> f64 {
        ratio(self.nsp_correct, self.nsp_count)
    }

    /// Count-weighted merge of two batch results.
    pub fn merge(&self, other: &LossValue) -> LossValue {
        let wmean = |a: f64, na: usize, b: f64, nb: usize| {
            if na + nb == 0 {
                0.0
            } else {
                (a * na as f64 + b * nb as f64) / (na + nb) as f64
            }
        };
        let mlm = wmean(self.mlm, self.mlm_count, other.mlm, other.mlm_count);
        let nsp = wmean(self.nsp, self.nsp_count, other.nsp, other.nsp_count);
        LossValue {
            total: mlm + nsp,
            mlm,
            nsp,
            mlm_count: self.mlm_count + other.mlm_count,
            mlm_correct: self.mlm_correct + other.mlm_correct,
            nsp_count: self.nsp_count + other.nsp_count,
            nsp_correct: self.nsp_correct + other.nsp_correct,
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Cross-entropy of `logits` against `gold`. Writes `softmax - onehot` into
/// `grad` when given. Returns the loss and the (first) argmax.
pub(crate) fn softmax_xent<T: Scalar>(logits: &[T], gold: usize, grad: Option<&mut [T]>) -> (T, usize) {
    let mut argmax = 0;
    for (i, &l) in logits.iter().enumerate() {
        if l > logits[argmax] {
            argmax = i;
        }
    }
    let max = logits[argmax];
    let sum: T = logits.iter().map(|&l| (l - max).exp()).sum();
    let lse = max + sum.ln();
    if let Some(grad) = grad {
        for (g, &l) in grad.iter_mut().zip(logits) {
            *g = (l - lse).exp();
        }
        grad[gold] -= T::one();
    }
    (lse - logits[gold], argmax)
}

/// Mean MLM cross-entropy over labeled positions plus mean NSP
/// cross-entropy over labeled examples.
pub fn loss<T: Scalar>(output: &ForwardOutput<T>, batch: &Batch) -> Result<LossValue, ModelError> {
    let vocab = output.mlm_logits.shape()[2];
    let mut value = LossValue::default();
    let mut mlm_sum = 0.0;
    for (pos, label) in batch.mlm_labels.iter().enumerate() {
        if let Some(gold) = *label {
            let logits = &output.mlm_logits.data()[pos * vocab..(pos + 1) * vocab];
            let (l, argmax) = softmax_xent(logits, gold as usize, None);
            mlm_sum += l.as_f64();
            value.mlm_count += 1;
            value.mlm_correct += usize::from(argmax == gold as usize);
        }
    }
    let mut nsp_sum = 0.0;
    for (b, label) in batch.nsp_labels.iter().enumerate() {
        if let Some(gold) = *label {
            let (l, argmax) = softmax_xent(output.nsp_logits.row(b), gold as usize, None);
            nsp_sum += l.as_f64();
            value.nsp_count += 1;
            value.nsp_correct += usize::from(argmax == gold as usize);
        }
    }
    if value.mlm_count == 0 && value.nsp_count == 0 {
        return Err(ModelError::NoLabels);
    }
    if value.mlm_count > 0 {
        value.mlm = mlm_sum / value.mlm_count as f64;
    }
    if value.nsp_count > 0 {
        value.nsp = nsp_sum / value.nsp_count as f64;
    }
    value.total = value.mlm + value.nsp;
    Ok(value)
}
