//! ROC and precision-recall curves from raw score sets.

use super::EvalError;
use serde::{Deserialize, Serialize};

/// One operating point: classify positive iff `score >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    pub auroc: f64,
    pub aupr: f64,
    pub points: Vec<RocPoint>,
}

impl RocReport {
    /// Minimum false-positive rate among thresholds reaching `level`
    /// true-positive rate.
    pub fn fpr_at_tpr(&self, level: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.tpr >= level)
            .map(|p| p.fpr)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Build the ROC curve by sweeping all thresholds, grouping tied scores,
/// and integrating with the trapezoid rule. The resulting AUROC equals
/// the Mann-Whitney pair statistic with ties counted one half. AUPR is
/// the step-interpolated average precision.
pub fn roc_pr(scores_pos: &[f64], scores_neg: &[f64]) -> Result<RocReport, EvalError> {
    if scores_pos.is_empty() || scores_neg.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let mut all: Vec<(f64, bool)> = scores_pos
        .iter()
        .map(|&s| (s, true))
        .chain(scores_neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite scores"));

    let p = scores_pos.len() as f64;
    let n = scores_neg.len() as f64;
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        tpr: 0.0,
        fpr: 0.0,
    }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut auroc = 0.0;
    let mut aupr = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < all.len() {
        let score = all[i].0;
        let mut j = i;
        while j < all.len() && all[j].0 == score {
            if all[j].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let prev = *points.last().unwrap();
        let point = RocPoint {
            threshold: score,
            tpr: tp as f64 / p,
            fpr: fp as f64 / n,
        };
        auroc += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) / 2.0;
        if tp + fp > 0 {
            let precision = tp as f64 / (tp + fp) as f64;
            aupr += (point.tpr - prev_recall) * precision;
            prev_recall = point.tpr;
        }
        points.push(point);
        i = j;
    }
    Ok(RocReport { auroc, aupr, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Mann-Whitney pair statistic: fraction of (pos, neg) pairs where
    /// the positive scores higher, ties counted one half.
    fn mann_whitney(pos: &[f64], neg: &[f64]) -> f64 {
        let mut wins = 0.0;
        for &a in pos {
            for &b in neg {
                if a > b {
                    wins += 1.0;
                } else if a == b {
                    wins += 0.5;
                }
            }
        }
        wins / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn perfect_separation() {
        let r = roc_pr(&[0.9, 0.8, 0.7], &[0.3, 0.2]).unwrap();
        assert_eq!(r.auroc, 1.0);
        assert_eq!(r.aupr, 1.0);
        assert_eq!(r.fpr_at_tpr(0.95), 0.0);
    }

    #[test]
    fn three_of_four_pairs_win() {
        let r = roc_pr(&[0.9, 0.8], &[0.7, 0.85]).unwrap();
        assert!((r.auroc - 0.75).abs() < 1e-12);
    }

    #[test]
    fn identical_multisets_score_half() {
        let r = roc_pr(&[0.5, 0.1, 0.9], &[0.5, 0.1, 0.9]).unwrap();
        assert!((r.auroc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_sets_are_errors() {
        assert_eq!(roc_pr(&[], &[0.1]), Err(EvalError::EmptySet));
        assert_eq!(roc_pr(&[0.1], &[]), Err(EvalError::EmptySet));
    }

    proptest! {
        #[test]
        fn trapezoid_equals_mann_whitney(
            pos in proptest::collection::vec(0.0f64..1.0, 1..30),
            neg in proptest::collection::vec(0.0f64..1.0, 1..30),
        ) {
            let r = roc_pr(&pos, &neg).unwrap();
            prop_assert!((r.auroc - mann_whitney(&pos, &neg)).abs() < 1e-12);
        }

        #[test]
        fn swapping_classes_complements_auroc(
            pos in proptest::collection::vec(0.0f64..1.0, 1..20),
            neg in proptest::collection::vec(0.0f64..1.0, 1..20),
        ) {
            let a = roc_pr(&pos, &neg).unwrap().auroc;
            let b = roc_pr(&neg, &pos).unwrap().auroc;
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }

        #[test]
        fn ties_quantize_scores_and_still_match(
            pos in proptest::collection::vec(0u8..4, 1..25),
            neg in proptest::collection::vec(0u8..4, 1..25),
        ) {
            // Coarse scores force many ties.
            let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
            let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
            let r = roc_pr(&pos, &neg).unwrap();
            prop_assert!((r.auroc - mann_whitney(&pos, &neg)).abs() < 1e-12);
        }
    }
}
