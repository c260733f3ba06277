use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalError, EvalSequence, Predictor};

/// Accuracy of one predictor on one run's sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub top_ks: Vec<usize>,
    /// Percentages, one per entry of `top_ks`.
    pub accuracy: Vec<f64>,
    pub hits: Vec<usize>,
    pub scored: usize,
    pub skipped: usize,
}

/// Top-k word match in percent. The predictor is asked once for the largest
/// k and every smaller k reads a prefix of that list, so accuracy is
/// monotone in k. Skipped sequences leave the denominator.
pub fn score_run(
    sequences: &[EvalSequence],
    predictor: &dyn Predictor,
    top_ks: &[usize],
) -> Result<RunScore, EvalError> {
    let k_max = top_ks.iter().copied().max().unwrap_or(0);
    let ranks: Vec<Option<Option<usize>>> = sequences
        .par_iter()
        .map(|s| {
            predictor
                .predict(&s.words, s.masked_index, k_max)
                .map(|c| c.iter().take(k_max).position(|w| *w == s.gold_word))
        })
        .collect();
    let skipped = ranks.iter().filter(|r| r.is_none()).count();
    let scored = ranks.len() - skipped;
    if scored == 0 {
        return Err(EvalError::NothingScored {
            predictor: predictor.name().to_string(),
            skipped,
        });
    }
    let hits: Vec<usize> = top_ks
        .iter()
        .map(|&k| {
            ranks
                .iter()
                .filter(|r| matches!(r, Some(Some(p)) if *p < k))
                .count()
        })
        .collect();
    Ok(RunScore {
        top_ks: top_ks.to_vec(),
        accuracy: hits.iter().map(|&h| h as f64 / scored as f64 * 100.0).collect(),
        hits,
        scored,
        skipped,
    })
}

/// Mean and population standard deviation.
pub fn aggregate_runs(values: &[f64]) -> Result<(f64, f64), EvalError> {
    if values.is_empty() {
        return Err(EvalError::NoRuns);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// `"64.06 (1.08%)"`.
pub fn format_score(mean: f64, std: f64) -> String {
    format!("{mean:.2} ({std:.2}%)")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{AdversarialPredictor, OraclePredictor};

    fn seqs(n: usize) -> Vec<EvalSequence> {
        (0..n)
            .map(|i| {
                let words: Vec<String> = (0..4).map(|j| format!("w{}", i + j)).collect();
                EvalSequence {
                    offset: i,
                    gold_word: words[i % 4].clone(),
                    masked_index: i % 4,
                    words,
                }
            })
            .collect()
    }

    #[test]
    fn fixture_bounds() {
        let s = seqs(50);
        let oracle = score_run(&s, &OraclePredictor, &[1, 3, 5]).unwrap();
        assert_eq!(oracle.accuracy, vec![100.0; 3]);
        let adv = score_run(&s, &AdversarialPredictor, &[1, 3, 5]).unwrap();
        assert_eq!(adv.accuracy, vec![0.0; 3]);
        assert_eq!(adv.scored + adv.skipped, 50);
    }

    struct SkipOdd;
    impl Predictor for SkipOdd {
        fn name(&self) -> &str {
            "skip-odd"
        }
        fn predict(&self, words: &[String], i: usize, _k: usize) -> Option<Vec<String>> {
            i.is_multiple_of(2).then(|| vec!["x".into(), words[i].clone()])
        }
    }

    #[test]
    fn skipped_sequences_leave_the_denominator() {
        let r = score_run(&seqs(8), &SkipOdd, &[1, 2]).unwrap();
        assert_eq!((r.scored, r.skipped), (4, 4));
        assert_eq!(r.accuracy, vec![0.0, 100.0]);
        let odd: Vec<EvalSequence> = seqs(8).into_iter().filter(|s| s.masked_index % 2 == 1).collect();
        assert!(matches!(
            score_run(&odd, &SkipOdd, &[1]),
            Err(EvalError::NothingScored { skipped: 4, .. })
        ));
    }

    #[test]
    fn aggregation_oracle() {
        let (mean, std) = aggregate_runs(&[64.0, 65.0, 63.0, 64.0, 64.3]).unwrap();
        assert!((mean - 64.06).abs() < 1e-12);
        // squared deviations sum to 2.072
        assert!((std - (2.072f64 / 5.0).sqrt()).abs() < 1e-12);
        assert_eq!(format_score(mean, std), "64.06 (0.64%)");
        assert_eq!(aggregate_runs(&[42.5]).unwrap(), (42.5, 0.0));
        assert!(matches!(aggregate_runs(&[]), Err(EvalError::NoRuns)));
        assert_eq!(format_score(64.06, 1.08), "64.06 (1.08%)");
    }
}
