//! Split conformal prediction on max-softmax scores.
//!
//! Calibration scores are `s = 1 - p(true class)`; the quantile `q̂` is
//! the `⌈(n+1)(1-α)⌉`-th smallest score. A class joins the prediction
//! set when its probability reaches `1 - q̂`. `alpha` is the miscoverage
//! rate (0.05 targets 95% coverage); sources sometimes quote the same
//! target as "α = 0.95", which is the complementary convention.

use super::{ceil_rank, TrustError};
use crate::rng::rng_for;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Calibrated quantile, or the finite-sample sentinel demanding that
/// every class be included (rank exceeded the calibration size).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QHat {
    Value(f64),
    #[serde(with = "include_all_tag")]
    IncludeAll,
}

mod include_all_tag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("include-all")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let tag = String::deserialize(d)?;
        if tag == "include-all" {
            Ok(())
        } else {
            Err(serde::de::Error::custom("expected \"include-all\""))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalCalibration {
    pub kind: String,
    pub alpha: f64,
    pub q_hat: QHat,
    pub n_cal: usize,
    pub score_kind: String,
    pub created_from: String,
}

/// Fit `q̂` from calibration probability rows and true labels.
pub fn calibrate_conformal(
    cal_probs: &[Vec<f64>],
    cal_labels: &[usize],
    alpha: f64,
    created_from: impl Into<String>,
) -> Result<ConformalCalibration, TrustError> {
    if cal_probs.is_empty() || cal_probs.len() != cal_labels.len() {
        return Err(TrustError::EmptyCalibration);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TrustError::BadAlpha(alpha));
    }
    let mut scores = Vec::with_capacity(cal_probs.len());
    for (row, &label) in cal_probs.iter().zip(cal_labels) {
        if label >= row.len() {
            return Err(TrustError::BadLabel {
                label,
                classes: row.len(),
            });
        }
        scores.push(1.0 - row[label]);
    }
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = scores.len();
    let rank = ceil_rank((n + 1) as f64 * (1.0 - alpha));
    let q_hat = if rank > n {
        QHat::IncludeAll
    } else {
        QHat::Value(scores[rank - 1])
    };
    Ok(ConformalCalibration {
        kind: "conformal".to_string(),
        alpha,
        q_hat,
        n_cal: n,
        score_kind: "one-minus-true-class-probability".to_string(),
        created_from: created_from.into(),
    })
}

/// Classes with probability at or above `1 - q̂`, sorted by descending
/// probability (ties by ascending class id). The include-all sentinel
/// returns every class; an empty set is legal at this layer.
pub fn conformal_set(probs: &[f64], calib: &ConformalCalibration) -> Vec<(usize, f64)> {
    let threshold = match calib.q_hat {
        QHat::Value(q) => 1.0 - q,
        QHat::IncludeAll => f64::NEG_INFINITY,
    };
    let mut set: Vec<(usize, f64)> = probs
        .iter()
        .enumerate()
        .filter(|&(_, &p)| p >= threshold)
        .map(|(i, &p)| (i, p))
        .collect();
    set.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    set
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Fraction of test examples whose true label fell in the set.
    pub empirical_coverage: f64,
    pub mean_set_size: f64,
}

/// Empirical coverage and mean set size over a test set.
pub fn evaluate_coverage(
    test_probs: &[Vec<f64>],
    test_labels: &[usize],
    calib: &ConformalCalibration,
) -> Result<CoverageReport, TrustError> {
    if test_probs.is_empty() || test_probs.len() != test_labels.len() {
        return Err(TrustError::EmptySet);
    }
    let mut covered = 0usize;
    let mut size_sum = 0usize;
    for (row, &label) in test_probs.iter().zip(test_labels) {
        if label >= row.len() {
            return Err(TrustError::BadLabel {
                label,
                classes: row.len(),
            });
        }
        let set = conformal_set(row, calib);
        size_sum += set.len();
        if set.iter().any(|&(i, _)| i == label) {
            covered += 1;
        }
    }
    Ok(CoverageReport {
        empirical_coverage: covered as f64 / test_probs.len() as f64,
        mean_set_size: size_sum as f64 / test_probs.len() as f64,
    })
}

impl ConformalCalibration {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifact serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TrustError> {
        let v: ConformalCalibration = serde_json::from_str(text)?;
        if v.kind != "conformal" {
            return Err(TrustError::WrongKind(v.kind, "conformal"));
        }
        Ok(v)
    }
}

/// Simulated classifier outputs for coverage experiments: a label is
/// drawn uniformly, logits put weight `signal` on the true class plus
/// noise, and the softmax rows are returned with the labels.
pub fn synthetic_probs(
    n: usize,
    classes: usize,
    signal: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = rng_for(seed, "synthetic-probs", 0);
    let mut probs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let label = rng.random_range(0..classes);
        let logits: Vec<f64> = (0..classes)
            .map(|c| {
                let base = if c == label { signal } else { 0.0 };
                base + rng.random_range(-1.0..1.0)
            })
            .collect();
        probs.push(crate::numeric::softmax_stable(&logits).expect("finite logits"));
        labels.push(label);
    }
    (probs, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_arithmetic_matches_oracle() {
        // n = 19 scores 0.05..0.95, alpha = 0.05 -> rank 19 -> q̂ = 0.95.
        let probs: Vec<Vec<f64>> = (1..=19)
            .map(|i| {
                let s = i as f64 * 0.05;
                vec![1.0 - s, s]
            })
            .collect();
        let labels = vec![0usize; 19];
        let calib = calibrate_conformal(&probs, &labels, 0.05, "unit").unwrap();
        assert_eq!(calib.n_cal, 19);
        match calib.q_hat {
            QHat::Value(q) => assert!((q - 0.95).abs() < 1e-12),
            QHat::IncludeAll => panic!("expected a value"),
        }
    }

    #[test]
    fn small_n_forces_include_all() {
        // n = 4, alpha = 0.05 -> rank ceil(5 * 0.95) = 5 > 4.
        let probs = vec![vec![0.9, 0.1]; 4];
        let labels = vec![0usize; 4];
        let calib = calibrate_conformal(&probs, &labels, 0.05, "unit").unwrap();
        assert_eq!(calib.q_hat, QHat::IncludeAll);
        // Include-all covers everything, even zero-probability classes.
        let set = conformal_set(&[0.0, 1.0, 0.0], &calib);
        assert_eq!(set.len(), 3);
        let report = evaluate_coverage(&probs, &labels, &calib).unwrap();
        assert_eq!(report.empirical_coverage, 1.0);
        assert_eq!(report.mean_set_size, 2.0);
    }

    #[test]
    fn figure_style_two_element_set() {
        // p = (0.56, 0.44) with 1 - q̂ = 0.097 keeps both congeners.
        let calib = ConformalCalibration {
            kind: "conformal".into(),
            alpha: 0.05,
            q_hat: QHat::Value(0.903),
            n_cal: 100,
            score_kind: "one-minus-true-class-probability".into(),
            created_from: "unit".into(),
        };
        let set = conformal_set(&[0.56, 0.44], &calib);
        assert_eq!(set.len(), 2);
        assert_eq!(set[0].0, 0);
        assert!((set[0].1 - 0.56).abs() < 1e-12);
    }

    #[test]
    fn uniform_probabilities_below_threshold_give_empty_set() {
        let calib = ConformalCalibration {
            kind: "conformal".into(),
            alpha: 0.05,
            q_hat: QHat::Value(0.5), // threshold 0.5 > 1/C
            n_cal: 10,
            score_kind: "one-minus-true-class-probability".into(),
            created_from: "unit".into(),
        };
        let set = conformal_set(&[0.25, 0.25, 0.25, 0.25], &calib);
        assert!(set.is_empty());
    }

    #[test]
    fn smaller_alpha_gives_supersets() {
        let (probs, labels) = synthetic_probs(300, 6, 2.0, 11);
        let tight = calibrate_conformal(&probs, &labels, 0.2, "unit").unwrap();
        let loose = calibrate_conformal(&probs, &labels, 0.05, "unit").unwrap();
        let (test_probs, _) = synthetic_probs(50, 6, 2.0, 12);
        for row in &test_probs {
            let small: Vec<usize> = conformal_set(row, &tight).iter().map(|x| x.0).collect();
            let large: Vec<usize> = conformal_set(row, &loose).iter().map(|x| x.0).collect();
            for id in &small {
                assert!(large.contains(id), "set(alpha=0.05) must contain set(alpha=0.2)");
            }
        }
    }

    #[test]
    fn monte_carlo_coverage_sits_near_target() {
        // 20 resampled calibrations, n_cal = 500, test = 500, alpha = 0.05.
        let mut coverages = Vec::new();
        for trial in 0..20 {
            let (cal_probs, cal_labels) = synthetic_probs(500, 8, 2.5, 1000 + trial);
            let calib = calibrate_conformal(&cal_probs, &cal_labels, 0.05, "mc").unwrap();
            let (test_probs, test_labels) = synthetic_probs(500, 8, 2.5, 5000 + trial);
            let report = evaluate_coverage(&test_probs, &test_labels, &calib).unwrap();
            coverages.push(report.empirical_coverage);
        }
        let mean = coverages.iter().sum::<f64>() / coverages.len() as f64;
        assert!(
            (0.93..=0.985).contains(&mean),
            "mean coverage {mean} outside [0.93, 0.985]"
        );
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(
            calibrate_conformal(&[], &[], 0.05, "x"),
            Err(TrustError::EmptyCalibration)
        ));
        let probs = vec![vec![1.0, 0.0]];
        assert!(matches!(
            calibrate_conformal(&probs, &[0], 1.5, "x"),
            Err(TrustError::BadAlpha(_))
        ));
        assert!(matches!(
            calibrate_conformal(&probs, &[7], 0.05, "x"),
            Err(TrustError::BadLabel { .. })
        ));
    }

    #[test]
    fn artifact_json_round_trip_with_sentinel() {
        let calib = ConformalCalibration {
            kind: "conformal".into(),
            alpha: 0.05,
            q_hat: QHat::IncludeAll,
            n_cal: 4,
            score_kind: "one-minus-true-class-probability".into(),
            created_from: "digest".into(),
        };
        let json = calib.to_json();
        assert!(json.contains("include-all"));
        let back = ConformalCalibration::from_json(&json).unwrap();
        assert_eq!(back, calib);

        let with_value = ConformalCalibration {
            q_hat: QHat::Value(0.903),
            ..calib
        };
        let json = with_value.to_json();
        let back = ConformalCalibration::from_json(&json).unwrap();
        assert_eq!(back, with_value);
    }
}
