//! Per-stratum metric breakdowns (life stage, look-alike group, ...).

use super::confusion::ConfusionMatrix;
use super::metrics::{macro_metrics_with, MetricsReport, UndefinedMetric};
use super::EvalError;
use crate::numeric::argmax;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// One row of the strata table: challenge name, class coverage, and the
/// usual metric block over the tagged subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrataRow {
    pub tag: String,
    /// Distinct true classes appearing in the stratum.
    pub class_count: usize,
    pub n_examples: u64,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct StrataReport {
    pub rows: Vec<StrataRow>,
}

/// Compute one metric row per tag value. Examples may carry several tags
/// and then count in each stratum. Macro averages are taken over the
/// classes with test data in the stratum (0/0 terms excluded), matching
/// how subset challenge tables are reported.
pub fn strata_report(
    prob_rows: &[Vec<f64>],
    labels: &[usize],
    strata_tags: &[BTreeSet<String>],
    classes: usize,
) -> Result<StrataReport, EvalError> {
    if prob_rows.len() != labels.len() {
        return Err(EvalError::LengthMismatch(prob_rows.len(), labels.len()));
    }
    if strata_tags.len() != labels.len() {
        return Err(EvalError::LengthMismatch(strata_tags.len(), labels.len()));
    }
    let mut by_tag: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, tags) in strata_tags.iter().enumerate() {
        for tag in tags {
            by_tag.entry(tag.as_str()).or_default().push(i);
        }
    }
    let preds: Vec<usize> = prob_rows
        .iter()
        .map(|row| argmax(row).ok_or(EvalError::EmptySet))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    for (tag, indices) in by_tag {
        let mut cm = ConfusionMatrix::new(classes);
        let mut seen = BTreeSet::new();
        for &i in &indices {
            cm.record(labels[i], preds[i])?;
            seen.insert(labels[i]);
        }
        let metrics = macro_metrics_with(&cm, UndefinedMetric::Exclude)?;
        rows.push(StrataRow {
            tag: tag.to_string(),
            class_count: seen.len(),
            n_examples: indices.len() as u64,
            metrics,
        });
    }
    Ok(StrataReport { rows })
}

impl StrataReport {
    /// Aligned-column text table (challenge, classes, images, metrics).
    pub fn to_text(&self) -> String {
        let mut out = String::from(
            "challenge                 classes   images  accuracy  macro_p  macro_r  macro_f1\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<25} {:>7} {:>8} {:>9.3} {:>8.3} {:>8.3} {:>9.3}\n",
                r.tag,
                r.class_count,
                r.n_examples,
                r.metrics.accuracy,
                r.metrics.macro_precision,
                r.metrics.macro_recall,
                r.metrics.macro_f1,
            ));
        }
        out
    }
}
