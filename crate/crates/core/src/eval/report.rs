//! Full evaluation report assembly and CSV/JSON export.

use super::attribution::{attribute_errors, per_class_report, AttributionRecord, ClassAccuracyRow, PerClassSummary};
use super::confusion::{confusion, ConfusionMatrix};
use super::metrics::{macro_metrics, topk_accuracy, MetricsReport};
use super::strata::{strata_report, StrataReport};
use super::EvalError;
use crate::numeric::argmax;
use crate::taxonomy::ClassSet;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

/// Everything measured in one evaluation pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub classes: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub per_class: Vec<ClassAccuracyRow>,
    pub summary: PerClassSummary,
    pub strata: StrataReport,
    pub attribution: Vec<AttributionRecord>,
}

/// Build the report from probability rows. `accuracy_threshold` feeds
/// the per-class summary; `attribution_ceiling` selects which classes
/// get error attribution.
#[allow(clippy::too_many_arguments)]
pub fn build_report(
    dataset: impl Into<String>,
    prob_rows: &[Vec<f64>],
    labels: &[usize],
    strata_tags: &[BTreeSet<String>],
    class_set: &ClassSet,
    train_counts: &[u64],
    accuracy_threshold: f64,
    attribution_ceiling: f64,
) -> Result<EvaluationReport, EvalError> {
    let classes = class_set.len();
    let preds: Vec<usize> = prob_rows
        .iter()
        .map(|row| argmax(row).ok_or(EvalError::EmptySet))
        .collect::<Result<_, _>>()?;
    let cm = confusion(&preds, labels, classes)?;
    let mut metrics = macro_metrics(&cm)?;
    metrics.top1 = topk_accuracy(prob_rows, labels, 1)?;
    metrics.top5 = Some(topk_accuracy(prob_rows, labels, 5.min(classes))?);
    let (per_class, summary) = per_class_report(&cm, train_counts, accuracy_threshold)?;
    let strata = strata_report(prob_rows, labels, strata_tags, classes)?;
    let attribution = attribute_errors(&cm, class_set, train_counts, attribution_ceiling)?;
    Ok(EvaluationReport {
        dataset: dataset.into(),
        classes,
        confusion: cm,
        metrics,
        per_class,
        summary,
        strata,
        attribution,
    })
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Write `report.json` plus CSV side files into `dir`.
    pub fn write_files(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        crate::util::write_atomic(&dir.join("report.json"), self.to_json().as_bytes())?;

        let mut confusion_csv = String::new();
        for row in self.confusion.counts() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            confusion_csv.push_str(&cells.join(","));
            confusion_csv.push('\n');
        }
        crate::util::write_atomic(&dir.join("confusion.csv"), confusion_csv.as_bytes())?;

        let mut per_class = String::from("class_id,accuracy,test_count,train_count\n");
        for r in &self.per_class {
            per_class.push_str(&format!(
                "{},{},{},{}\n",
                r.class_id,
                r.accuracy.map_or(String::from("no test data"), |a| a.to_string()),
                r.test_count,
                r.train_count
            ));
        }
        crate::util::write_atomic(&dir.join("per_class.csv"), per_class.as_bytes())?;

        let mut strata = String::from(
            "tag,class_count,n_examples,accuracy,macro_precision,macro_recall,macro_f1\n",
        );
        for r in &self.strata.rows {
            strata.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.tag,
                r.class_count,
                r.n_examples,
                r.metrics.accuracy,
                r.metrics.macro_precision,
                r.metrics.macro_recall,
                r.metrics.macro_f1
            ));
        }
        crate::util::write_atomic(&dir.join("strata.csv"), strata.as_bytes())?;

        let mut attribution = String::from(
            "class_id,scientific_name,accuracy,confounder,count,fraction,same_genus,same_family,confounder_train_count\n",
        );
        for r in &self.attribution {
            attribution.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.class_id,
                r.scientific_name,
                r.accuracy,
                r.confounder_name,
                r.count,
                r.fraction,
                r.same_genus,
                r.same_family,
                r.confounder_train_count
            ));
        }
        crate::util::write_atomic(&dir.join("attribution.csv"), attribution.as_bytes())?;
        Ok(())
    }
}
