use rand::Rng;

use super::{EvalConfig, EvalError, EvalSequence};
use crate::rng::{self, tag};

/// Number of full windows in a text of `words` words.
pub fn window_count(words: usize, window: usize, stride: usize) -> usize {
    if words < window || stride == 0 {
        0
    } else {
        (words - window) / stride + 1
    }
}

/// Cuts `text` into windows at offsets `0, stride, 2·stride, …` and masks one
/// word in each. The masked word is drawn uniformly among the words
/// `maskable` accepts (all words if it accepts none), from a stream keyed by
/// `(seed, run, offset)`.
pub fn make_eval_sequences(
    text: &str,
    config: &EvalConfig,
    run: usize,
    maskable: &dyn Fn(&str) -> bool,
) -> Result<Vec<EvalSequence>, EvalError> {
    config.validate()?;
    let words: Vec<&str> = text.split_whitespace().collect();
    let (window, stride) = (config.window_words, config.stride_words);
    if words.len() < window {
        return Err(EvalError::TextTooShort {
            required: window,
            found: words.len(),
        });
    }
    let sequences = (0..window_count(words.len(), window, stride))
        .map(|w| {
            let offset = w * stride;
            let slice = &words[offset..offset + window];
            let mut candidates: Vec<usize> = (0..window).filter(|&i| maskable(slice[i])).collect();
            if candidates.is_empty() {
                candidates = (0..window).collect();
            }
            let mut r = rng::stream(&[tag::EVAL_MASK, config.rng_seed, run as u64, offset as u64]);
            let masked_index = candidates[r.random_range(0..candidates.len())];
            EvalSequence {
                offset,
                words: slice.iter().map(|w| w.to_string()).collect(),
                masked_index,
                gold_word: slice[masked_index].to_string(),
            }
        })
        .collect();
    Ok(sequences)
}
