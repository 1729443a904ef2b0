//! Trustworthiness wrappers around the classifier: energy-based
//! out-of-distribution detection and split conformal prediction.
//!
//! Both calibrations are post-hoc: they fit a handful of scalars
//! (temperature, threshold, quantile) on held-out logits and never touch
//! model parameters. Calibration artifacts are immutable values; callers
//! swap them atomically.

mod conformal;
mod energy;

pub use conformal::{
    calibrate_conformal, conformal_set, evaluate_coverage, synthetic_probs, ConformalCalibration,
    CoverageReport, QHat,
};
pub use energy::{
    calibrate_ood, energy_score, ood_decide, OodCalibration, OodDecision, OodMetrics, OodSummary,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrustError {
    #[error("empty input set")]
    EmptySet,
    #[error("empty calibration set")]
    EmptyCalibration,
    #[error("temperature grid is empty")]
    EmptyTemperatureGrid,
    #[error("alpha {0} must lie in (0, 1)")]
    BadAlpha(f64),
    #[error("label {label} out of range for row of {classes} probabilities")]
    BadLabel { label: usize, classes: usize },
    #[error(transparent)]
    Numeric(#[from] crate::numeric::NumericError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error("artifact json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("artifact kind '{0}', expected '{1}'")]
    WrongKind(String, &'static str),
}

/// Combined verdict attached to a prediction by the serving layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustVerdict {
    pub energy: f64,
    pub is_ood: bool,
    /// `(class_id, probability)` sorted by descending probability.
    pub conformal_set: Vec<(usize, f64)>,
}

/// Ceiling index guarded against binary-representation drift: values an
/// epsilon above an integer (e.g. `0.95 * 20 = 19.000000000000004`)
/// still rank as that integer.
pub(crate) fn ceil_rank(x: f64) -> usize {
    ((x - 1e-9).ceil().max(1.0)) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_rank_absorbs_float_noise() {
        assert_eq!(ceil_rank(19.000000000000004), 19);
        assert_eq!(ceil_rank(19.0), 19);
        assert_eq!(ceil_rank(18.2), 19);
        assert_eq!(ceil_rank(0.4), 1);
        assert_eq!(ceil_rank(20.0 * 0.95), 19);
        assert_eq!(ceil_rank(5.0 * 0.95), 5);
    }
}
