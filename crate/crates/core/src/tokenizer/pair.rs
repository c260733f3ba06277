use super::vocab::{CLS_ID, PAD_ID, SEP_ID};
use super::TokenizerError;

/// A packed `[CLS] a [SEP] b [SEP]` sequence padded to a fixed length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairInput {
    pub token_ids: Vec<u32>,
    pub segment_ids: Vec<u32>,
    pub attention_mask: Vec<u32>,
    /// Lengths of `a` and `b` after truncation.
    pub kept: (usize, usize),
}

/// Packs two segments, truncating the longer one a token at a time from its
/// end (ties trim `b`), then pads with `[PAD]` to `max_len`.
pub fn build_pair_input(a: &[u32], b: &[u32], max_len: usize) -> Result<PairInput, TokenizerError> {
    if max_len < 5 {
        return Err(TokenizerError::MaxLenTooSmall(max_len));
    }
    let budget = max_len - 3;
    let (mut len_a, mut len_b) = (a.len(), b.len());
    while len_a + len_b > budget {
        if len_a > len_b {
            len_a -= 1;
        } else {
            len_b -= 1;
        }
    }

    let mut token_ids = Vec::with_capacity(max_len);
    let mut segment_ids = Vec::with_capacity(max_len);
    token_ids.push(CLS_ID);
    token_ids.extend_from_slice(&a[..len_a]);
    token_ids.push(SEP_ID);
    segment_ids.resize(token_ids.len(), 0);
    token_ids.extend_from_slice(&b[..len_b]);
    token_ids.push(SEP_ID);
    segment_ids.resize(token_ids.len(), 1);

    let real = token_ids.len();
    let mut attention_mask = vec![1; real];
    token_ids.resize(max_len, PAD_ID);
    segment_ids.resize(max_len, 0);
    attention_mask.resize(max_len, 0);

    Ok(PairInput {
        token_ids,
        segment_ids,
        attention_mask,
        kept: (len_a, len_b),
    })
}
