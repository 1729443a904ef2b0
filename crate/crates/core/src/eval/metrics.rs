//! Accuracy, macro precision/recall/F1, and top-k accuracy.

use super::confusion::ConfusionMatrix;
use super::EvalError;
use serde::{Deserialize, Serialize};

/// How to treat a 0/0 per-class precision or recall term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UndefinedMetric {
    /// Count the class with value 0 (penalizes absent predictions).
    #[default]
    Zero,
    /// Drop the class from the macro average.
    Exclude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Equals `accuracy` when computed from a confusion matrix.
    pub top1: f64,
    /// Present only when probability rows were available.
    pub top5: Option<f64>,
    pub n_examples: u64,
}

/// Accuracy plus macro-averaged precision, recall, and F1.
///
/// Per class: precision `TP/(TP+FP)`, recall `TP/(TP+FN)`, F1
/// `2TP/(2TP+FP+FN)`. Macro averages divide by the number of classes
/// (the only normalization bounded by 1), with 0/0 terms handled per
/// `policy`.
pub fn macro_metrics_with(
    cm: &ConfusionMatrix,
    policy: UndefinedMetric,
) -> Result<MetricsReport, EvalError> {
    let n = cm.total();
    if n == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let c = cm.classes();
    let mut precision_sum = 0.0;
    let mut precision_count = 0usize;
    let mut recall_sum = 0.0;
    let mut recall_count = 0usize;
    let mut f1_sum = 0.0;
    let mut f1_count = 0usize;
    for i in 0..c {
        let tp = cm.true_positives(i) as f64;
        let fp = cm.false_positives(i) as f64;
        let fn_ = cm.false_negatives(i) as f64;
        for (num, den, sum, count) in [
            (tp, tp + fp, &mut precision_sum, &mut precision_count),
            (tp, tp + fn_, &mut recall_sum, &mut recall_count),
            (2.0 * tp, 2.0 * tp + fp + fn_, &mut f1_sum, &mut f1_count),
        ] {
            if den > 0.0 {
                *sum += num / den;
                *count += 1;
            } else if policy == UndefinedMetric::Zero {
                *count += 1;
            }
        }
    }
    let ratio = |sum: f64, count: usize| if count == 0 { 0.0 } else { sum / count as f64 };
    let accuracy = cm.trace() as f64 / n as f64;
    Ok(MetricsReport {
        accuracy,
        macro_precision: ratio(precision_sum, precision_count),
        macro_recall: ratio(recall_sum, recall_count),
        macro_f1: ratio(f1_sum, f1_count),
        top1: accuracy,
        top5: None,
        n_examples: n,
    })
}

pub fn macro_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    macro_metrics_with(cm, UndefinedMetric::Zero)
}

/// Fraction of examples whose true label ranks among the `k` highest
/// probabilities. Ties are broken by ascending class id, so the result
/// is deterministic.
pub fn topk_accuracy(
    prob_rows: &[Vec<f64>],
    labels: &[usize],
    k: usize,
) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::BadK);
    }
    if prob_rows.len() != labels.len() {
        return Err(EvalError::LengthMismatch(prob_rows.len(), labels.len()));
    }
    if prob_rows.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let mut correct = 0usize;
    for (row, &label) in prob_rows.iter().zip(labels) {
        if label >= row.len() {
            return Err(EvalError::IdOutOfRange {
                id: label,
                classes: row.len(),
            });
        }
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| {
            row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b))
        });
        if order.iter().take(k).any(|&i| i == label) {
            correct += 1;
        }
    }
    Ok(correct as f64 / prob_rows.len() as f64)
}
