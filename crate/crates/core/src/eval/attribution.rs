//! Per-class accuracy summaries and misclassification attribution.

use super::confusion::ConfusionMatrix;
use super::EvalError;
use crate::taxonomy::ClassSet;
use serde::{Deserialize, Serialize};

/// Accuracy of one class against its training-data volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracyRow {
    pub class_id: usize,
    /// `None` when the class had no test data.
    pub accuracy: Option<f64>,
    pub test_count: u64,
    pub train_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClassSummary {
    /// Fraction of evaluated classes at exactly 100% accuracy.
    pub fraction_at_100: f64,
    /// Fraction of evaluated classes at or above `threshold`.
    pub fraction_ge_threshold: f64,
    pub threshold: f64,
    /// Classes excluded for having no test data.
    pub classes_without_test_data: usize,
}

/// Per-class accuracy rows plus the 100%/threshold summary fractions.
/// Classes without test rows are reported but excluded from fractions.
pub fn per_class_report(
    cm: &ConfusionMatrix,
    train_counts: &[u64],
    threshold: f64,
) -> Result<(Vec<ClassAccuracyRow>, PerClassSummary), EvalError> {
    let c = cm.classes();
    if train_counts.len() != c {
        return Err(EvalError::BadTrainCounts(train_counts.len(), c));
    }
    let mut rows = Vec::with_capacity(c);
    let mut evaluated = 0usize;
    let mut at_100 = 0usize;
    let mut ge_threshold = 0usize;
    for i in 0..c {
        let total = cm.row_sum(i);
        let accuracy = if total == 0 {
            None
        } else {
            let acc = cm.true_positives(i) as f64 / total as f64;
            evaluated += 1;
            if acc == 1.0 {
                at_100 += 1;
            }
            if acc >= threshold {
                ge_threshold += 1;
            }
            Some(acc)
        };
        rows.push(ClassAccuracyRow {
            class_id: i,
            accuracy,
            test_count: total,
            train_count: train_counts[i],
        });
    }
    let frac = |n: usize| {
        if evaluated == 0 {
            0.0
        } else {
            n as f64 / evaluated as f64
        }
    };
    Ok((
        rows,
        PerClassSummary {
            fraction_at_100: frac(at_100),
            fraction_ge_threshold: frac(ge_threshold),
            threshold,
            classes_without_test_data: c - evaluated,
        },
    ))
}

/// Where a struggling class's errors went, with taxonomy context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub class_id: usize,
    pub scientific_name: String,
    pub accuracy: f64,
    pub confounder_id: usize,
    pub confounder_name: String,
    /// Errors absorbed by the top confounder.
    pub count: u64,
    /// Fraction of the class's test examples taken by the confounder.
    pub fraction: f64,
    pub same_genus: bool,
    pub same_family: bool,
    pub confounder_train_count: u64,
}

/// For every class below `accuracy_ceiling`, report its largest
/// off-diagonal destination (ties to the lowest class id) with
/// same-genus/family flags and the confounder's training volume.
pub fn attribute_errors(
    cm: &ConfusionMatrix,
    class_set: &ClassSet,
    train_counts: &[u64],
    accuracy_ceiling: f64,
) -> Result<Vec<AttributionRecord>, EvalError> {
    let c = cm.classes();
    if train_counts.len() != c {
        return Err(EvalError::BadTrainCounts(train_counts.len(), c));
    }
    if class_set.len() != c {
        return Err(EvalError::BadTrainCounts(class_set.len(), c));
    }
    let mut records = Vec::new();
    for i in 0..c {
        let total = cm.row_sum(i);
        if total == 0 {
            continue;
        }
        let accuracy = cm.true_positives(i) as f64 / total as f64;
        if accuracy >= accuracy_ceiling {
            continue;
        }
        let mut best: Option<(usize, u64)> = None;
        for j in 0..c {
            if j == i {
                continue;
            }
            let count = cm.count(i, j);
            if count == 0 {
                continue;
            }
            match best {
                Some((_, b)) if count <= b => {}
                _ => best = Some((j, count)),
            }
        }
        let Some((j, count)) = best else { continue };
        let source = class_set.lookup(i).map_err(|_| EvalError::IdOutOfRange {
            id: i,
            classes: c,
        })?;
        let confounder = class_set.lookup(j).map_err(|_| EvalError::IdOutOfRange {
            id: j,
            classes: c,
        })?;
        records.push(AttributionRecord {
            class_id: i,
            scientific_name: source.scientific_name.clone(),
            accuracy,
            confounder_id: j,
            confounder_name: confounder.scientific_name.clone(),
            count,
            fraction: count as f64 / total as f64,
            same_genus: source.genus == confounder.genus,
            same_family: source.family == confounder.family,
            confounder_train_count: train_counts[j],
        });
    }
    Ok(records)
}
