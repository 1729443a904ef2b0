//! Energy scores and out-of-distribution calibration.
//!
//! The energy of a logit vector is `-T * ln Σ exp(logit/T)`; lower
//! energy means more in-distribution. Calibration picks the temperature
//! maximizing AUROC on a calibration split and sets the threshold at
//! the target-TPR quantile of in-distribution energies.

use super::{ceil_rank, TrustError};
use crate::eval::roc_pr;
use crate::numeric::logsumexp;
use crate::rng::rng_for;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// `E = -T * ln Σ exp(logit/T)`, via shift-stable log-sum-exp.
///
/// Adding a constant `c` to every logit lowers the energy by exactly
/// `c`, so energies are not shift-invariant by design.
pub fn energy_score(logits: &[f64], temperature: f64) -> Result<f64, TrustError> {
    if logits.is_empty() {
        return Err(TrustError::EmptySet);
    }
    let scaled: Vec<f64> = logits.iter().map(|&l| l / temperature).collect();
    Ok(-temperature * logsumexp(&scaled)?)
}

/// Quantile summary of in-distribution calibration energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodSummary {
    /// `(quantile, energy)` pairs at 0/5/25/50/75/95/100%.
    pub id_energy_quantiles: Vec<(f64, f64)>,
    /// `(fpr, tpr)` points of the held-out ROC curve.
    pub roc_points: Vec<(f64, f64)>,
}

/// Calibrated OOD detector: temperature, energy threshold, and the
/// calibration summary. Boundary energies (`energy == tau`) count as
/// in-distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodCalibration {
    pub kind: String,
    pub temperature: f64,
    pub tau: f64,
    pub target_tpr: f64,
    pub n_cal: usize,
    pub created_from: String,
    pub summary: OodSummary,
}

/// Held-out separation metrics, reported alongside the calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodMetrics {
    pub auroc: f64,
    pub aupr: f64,
    /// False-positive rate at the target true-positive rate.
    pub fpr_at_target_tpr: f64,
    /// Accuracy of the `energy <= tau` decision on the held-out split.
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OodDecision {
    pub energy: f64,
    pub is_ood: bool,
}

fn energies(logit_rows: &[Vec<f64>], t: f64) -> Result<Vec<f64>, TrustError> {
    logit_rows.iter().map(|l| energy_score(l, t)).collect()
}

/// Split each logit set into calibration/evaluation parts, pick the
/// temperature with the best calibration AUROC, set `tau` at the
/// `target_tpr` quantile of in-distribution calibration energies, and
/// report metrics on the held-out part.
pub fn calibrate_ood(
    id_logits: &[Vec<f64>],
    ood_logits: &[Vec<f64>],
    t_grid: &[f64],
    target_tpr: f64,
    calibration_fraction: f64,
    seed: u64,
    created_from: impl Into<String>,
) -> Result<(OodCalibration, OodMetrics), TrustError> {
    if id_logits.is_empty() || ood_logits.is_empty() {
        return Err(TrustError::EmptySet);
    }
    if t_grid.is_empty() {
        return Err(TrustError::EmptyTemperatureGrid);
    }
    let split = |n: usize, tag: &str| -> (Vec<usize>, Vec<usize>) {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng_for(seed, tag, 0));
        let cal_n = ((n as f64 * calibration_fraction).round() as usize).clamp(1, n);
        let cal = idx[..cal_n].to_vec();
        let eval = if cal_n == n {
            cal.clone()
        } else {
            idx[cal_n..].to_vec()
        };
        (cal, eval)
    };
    let (id_cal_idx, id_eval_idx) = split(id_logits.len(), "ood-split-id");
    let (ood_cal_idx, ood_eval_idx) = split(ood_logits.len(), "ood-split-ood");
    let pick = |src: &[Vec<f64>], idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter().map(|&i| src[i].clone()).collect()
    };
    let id_cal = pick(id_logits, &id_cal_idx);
    let id_eval = pick(id_logits, &id_eval_idx);
    let ood_cal = pick(ood_logits, &ood_cal_idx);
    let ood_eval = pick(ood_logits, &ood_eval_idx);

    // Temperature selection: best calibration AUROC, first wins ties.
    let mut best: Option<(f64, f64)> = None;
    for &t in t_grid {
        let id_e = energies(&id_cal, t)?;
        let ood_e = energies(&ood_cal, t)?;
        let pos: Vec<f64> = id_e.iter().map(|e| -e).collect();
        let neg: Vec<f64> = ood_e.iter().map(|e| -e).collect();
        let auroc = roc_pr(&pos, &neg)?.auroc;
        match best {
            Some((_, b)) if auroc <= b => {}
            _ => best = Some((t, auroc)),
        }
    }
    let (temperature, _) = best.expect("grid nonempty");

    // tau: smallest threshold with TPR >= target on calibration IDs,
    // i.e. the target quantile of sorted ID energies.
    let mut id_cal_e = energies(&id_cal, temperature)?;
    id_cal_e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ceil_rank(target_tpr * id_cal_e.len() as f64).min(id_cal_e.len());
    let tau = id_cal_e[rank - 1];

    let quantiles = [0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0]
        .iter()
        .map(|&q| {
            let i = if q == 0.0 {
                0
            } else {
                ceil_rank(q * id_cal_e.len() as f64).min(id_cal_e.len()) - 1
            };
            (q, id_cal_e[i])
        })
        .collect();

    // Held-out metrics.
    let id_e = energies(&id_eval, temperature)?;
    let ood_e = energies(&ood_eval, temperature)?;
    let pos: Vec<f64> = id_e.iter().map(|e| -e).collect();
    let neg: Vec<f64> = ood_e.iter().map(|e| -e).collect();
    let roc = roc_pr(&pos, &neg)?;
    let correct = id_e.iter().filter(|&&e| e <= tau).count()
        + ood_e.iter().filter(|&&e| e > tau).count();
    let metrics = OodMetrics {
        auroc: roc.auroc,
        aupr: roc.aupr,
        fpr_at_target_tpr: roc.fpr_at_tpr(target_tpr),
        accuracy: correct as f64 / (id_e.len() + ood_e.len()) as f64,
    };
    let roc_points = roc.points.iter().map(|p| (p.fpr, p.tpr)).collect();
    Ok((
        OodCalibration {
            kind: "ood".to_string(),
            temperature,
            tau,
            target_tpr,
            n_cal: id_cal.len() + ood_cal.len(),
            created_from: created_from.into(),
            summary: OodSummary {
                id_energy_quantiles: quantiles,
                roc_points,
            },
        },
        metrics,
    ))
}

/// Pure decision: `is_ood` iff the energy exceeds the threshold.
pub fn ood_decide(logits: &[f64], calib: &OodCalibration) -> Result<OodDecision, TrustError> {
    let energy = energy_score(logits, calib.temperature)?;
    Ok(OodDecision {
        energy,
        is_ood: energy > calib.tau,
    })
}

impl OodCalibration {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifact serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TrustError> {
        let v: OodCalibration = serde_json::from_str(text)?;
        if v.kind != "ood" {
            return Err(TrustError::WrongKind(v.kind, "ood"));
        }
        Ok(v)
    }
}
