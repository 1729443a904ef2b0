//! Confusion-matrix construction and per-class count accessors.

use super::EvalError;
use serde::{Deserialize, Serialize};

/// C x C counts; rows index the true class, columns the prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let c = counts.len();
        if counts.iter().any(|row| row.len() != c) {
            return Err(EvalError::EmptyMatrix);
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, truth: usize, pred: usize) -> Result<(), EvalError> {
        let c = self.classes();
        if truth >= c {
            return Err(EvalError::IdOutOfRange { id: truth, classes: c });
        }
        if pred >= c {
            return Err(EvalError::IdOutOfRange { id: pred, classes: c });
        }
        self.counts[truth][pred] += 1;
        Ok(())
    }

    pub fn count(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth][pred]
    }

    pub fn counts(&self) -> &Vec<Vec<u64>> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }

    pub fn true_positives(&self, i: usize) -> u64 {
        self.counts[i][i]
    }

    pub fn false_negatives(&self, i: usize) -> u64 {
        self.row_sum(i) - self.true_positives(i)
    }

    pub fn false_positives(&self, i: usize) -> u64 {
        self.col_sum(i) - self.true_positives(i)
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Apply one permutation to both axes (relabeling classes).
    pub fn permuted(&self, perm: &[usize]) -> ConfusionMatrix {
        let c = self.classes();
        let mut out = ConfusionMatrix::new(c);
        for t in 0..c {
            for p in 0..c {
                out.counts[perm[t]][perm[p]] = self.counts[t][p];
            }
        }
        out
    }
}

/// Count `(label, prediction)` pairs into a C x C matrix.
pub fn confusion(preds: &[usize], labels: &[usize], classes: usize) -> Result<ConfusionMatrix, EvalError> {
    if preds.len() != labels.len() {
        return Err(EvalError::LengthMismatch(preds.len(), labels.len()));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (&p, &t) in preds.iter().zip(labels) {
        cm.record(t, p)?;
    }
    Ok(cm)
}
