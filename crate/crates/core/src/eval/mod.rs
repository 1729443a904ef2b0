//! Measurement machinery: confusion matrices, macro metrics, top-k
//! accuracy, ROC/PR curves, per-class summaries, misclassification
//! attribution, and strata reports.

mod attribution;
mod confusion;
mod metrics;
mod report;
mod roc;
mod strata;
mod svg;

pub use attribution::{attribute_errors, per_class_report, AttributionRecord, ClassAccuracyRow, PerClassSummary};
pub use confusion::{confusion, ConfusionMatrix};
pub use metrics::{macro_metrics, macro_metrics_with, topk_accuracy, MetricsReport, UndefinedMetric};
pub use report::{build_report, EvaluationReport};
pub use roc::{roc_pr, RocReport};
pub use strata::{strata_report, StrataReport, StrataRow};
pub use svg::{histogram_svg, scatter_svg};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("predictions and labels have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("class id {id} out of range for {classes} classes")]
    IdOutOfRange { id: usize, classes: usize },
    #[error("empty confusion matrix")]
    EmptyMatrix,
    #[error("empty score set")]
    EmptySet,
    #[error("k must be >= 1")]
    BadK,
    #[error("train_counts has length {0}, expected {1}")]
    BadTrainCounts(usize, usize),
}
