//! Binary classification metrics: confusion counts, accuracy, precision,
//! recall, F1, and rank-based ROC AUC.
//!
//! Zero-denominator conventions: precision and recall are 0 when their
//! denominators are 0, and F1 is 0 when precision + recall is 0, so result
//! tables never contain NaN.

use crate::error::{Error, Result};

/// Confusion-matrix counts at a fixed decision threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_pos + self.true_neg) as f64 / self.total() as f64
    }

    pub fn precision(&self) -> f64 {
        let denom = self.true_pos + self.false_pos;
        if denom == 0 {
            0.0
        } else {
            self.true_pos as f64 / denom as f64
        }
    }

    pub fn recall(&self) -> f64 {
        let denom = self.true_pos + self.false_neg;
        if denom == 0 {
            0.0
        } else {
            self.true_pos as f64 / denom as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Count confusion outcomes; a probability >= threshold predicts class 1.
pub fn confusion(probs: &[f64], labels: &[f64], threshold: f64) -> Result<ConfusionCounts> {
    if probs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if probs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: probs.len(),
            right: labels.len(),
        });
    }
    let mut counts = ConfusionCounts {
        true_pos: 0,
        false_pos: 0,
        true_neg: 0,
        false_neg: 0,
    };
    for (&p, &y) in probs.iter().zip(labels) {
        let predicted_pos = p >= threshold;
        let actual_pos = y == 1.0;
        match (predicted_pos, actual_pos) {
            (true, true) => counts.true_pos += 1,
            (true, false) => counts.false_pos += 1,
            (false, false) => counts.true_neg += 1,
            (false, true) => counts.false_neg += 1,
        }
    }
    Ok(counts)
}

/// Rank-based (Mann-Whitney) ROC AUC with 0.5 credit for ties between a
/// positive and a negative score.
///
/// Equivalent to counting concordant positive-negative pairs; ranks are
/// averaged over tie groups so the two routes agree exactly.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassAuc);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Average ranks within tie groups (1-based ranks).
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1.0 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent O(P*N) pairwise concordance oracle.
    pub(crate) fn auc_pairwise_oracle(scores: &[f64], labels: &[f64]) -> f64 {
        let mut concordant = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in labels.iter().enumerate() {
            if yi != 1.0 {
                continue;
            }
            for (j, &yj) in labels.iter().enumerate() {
                if yj != 0.0 {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    concordant += 1.0;
                } else if scores[i] == scores[j] {
                    concordant += 0.5;
                }
            }
        }
        concordant / pairs
    }

    #[test]
    fn test_confusion_hand_count() {
        let counts = confusion(&[0.9, 0.2, 0.8, 0.3], &[1.0, 0.0, 0.0, 1.0], 0.5).unwrap();
        assert_eq!(counts.true_pos, 1);
        assert_eq!(counts.false_pos, 1);
        assert_eq!(counts.true_neg, 1);
        assert_eq!(counts.false_neg, 1);
        assert_eq!(counts.accuracy(), 0.5);
        assert_eq!(counts.precision(), 0.5);
        assert_eq!(counts.recall(), 0.5);
        assert_eq!(counts.f1(), 0.5);
    }

    #[test]
    fn test_perfect_predictions() {
        let counts = confusion(&[0.9, 0.1, 0.8], &[1.0, 0.0, 1.0], 0.5).unwrap();
        assert_eq!(counts.accuracy(), 1.0);
        assert_eq!(counts.f1(), 1.0);
    }

    #[test]
    fn test_all_predicted_negative_precision_zero() {
        let counts = confusion(&[0.1, 0.2, 0.3], &[1.0, 0.0, 1.0], 0.5).unwrap();
        assert_eq!(counts.precision(), 0.0);
        assert_eq!(counts.recall(), 0.0);
        assert_eq!(counts.f1(), 0.0);
    }

    #[test]
    fn test_confusion_empty_input() {
        assert!(matches!(confusion(&[], &[], 0.5), Err(Error::EmptyInput)));
    }

    #[test]
    fn test_auc_hand_example() {
        // 3 of 4 positive-negative pairs concordant.
        let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(auc, 0.75);
    }

    #[test]
    fn test_auc_perfect_separation() {
        let auc = roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn test_auc_constant_scores() {
        let auc = roc_auc(&[0.5, 0.5, 0.5, 0.5], &[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn test_auc_single_class_error() {
        assert!(matches!(
            roc_auc(&[0.1, 0.2], &[1.0, 1.0]),
            Err(Error::SingleClassAuc)
        ));
    }

    #[test]
    fn test_auc_matches_pairwise_oracle_with_ties() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..60);
            // Quantized scores to force ties.
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64 / 8.0).collect();
            let mut labels: Vec<f64> = (0..n).map(|_| rng.gen_range(0..2) as f64).collect();
            labels[0] = 0.0;
            if n > 1 {
                labels[1] = 1.0;
            }
            let got = roc_auc(&scores, &labels).unwrap();
            let want = auc_pairwise_oracle(&scores, &labels);
            assert_eq!(got, want, "scores={scores:?} labels={labels:?}");
        }
    }

    #[test]
    fn test_auc_invariant_under_monotone_transform() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(4..40);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let mut labels: Vec<f64> = (0..n).map(|_| rng.gen_range(0..2) as f64).collect();
            labels[0] = 0.0;
            labels[1] = 1.0;
            let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp()).collect();
            assert_eq!(
                roc_auc(&scores, &labels).unwrap(),
                roc_auc(&transformed, &labels).unwrap()
            );
        }
    }
}
