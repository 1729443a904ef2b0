//! Central finite-difference verification of analytic gradients.
//!
//! The numeric side re-evaluates the forward loss with perturbed
//! parameters and never touches the backward pass, so it stays an
//! independent oracle for backpropagation.

use super::checkpoint::ModelCheckpoint;
use super::forward::{backprop, forward_classifier_loss, mae_forward_loss, SoftTargets};
use super::NnError;
use crate::rng::rng_for;
use ndarray::Array3;
use rand::seq::SliceRandom;
use std::collections::BTreeMap;

/// Loss used for a gradient check.
#[derive(Debug, Clone)]
pub enum GradCheckLoss {
    Mae { mask_seed: u64 },
    CrossEntropy { labels: Vec<usize> },
}

/// Worst relative error per parameter block.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub per_block: BTreeMap<String, f64>,
    pub entries_checked: usize,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.per_block.values().cloned().fold(0.0, f64::max)
    }
}

fn loss_value(
    ckpt: &ModelCheckpoint,
    images: &[Array3<f64>],
    loss: &GradCheckLoss,
) -> Result<f64, NnError> {
    match loss {
        GradCheckLoss::Mae { mask_seed } => Ok(mae_forward_loss(ckpt, images, *mask_seed)?.loss),
        GradCheckLoss::CrossEntropy { labels } => {
            let targets = SoftTargets::Hard(labels.clone());
            Ok(forward_classifier_loss(ckpt, images, &targets, None)?
                .loss_value
                .expect("loss attached"))
        }
    }
}

/// Compare analytic gradients against central finite differences with a
/// relative step of `1e-4` per parameter.
///
/// `samples_per_block` caps the entries checked per parameter matrix
/// (seeded sample; small matrices are checked exhaustively). `block_filter`
/// restricts the check to matching parameter names. The relative error
/// uses a unit floor, `|a - n| / max(|a|, |n|, 1)`, so near-zero
/// gradients are compared absolutely, which keeps finite-difference
/// round-off out of the verdict.
pub fn finite_difference_check(
    ckpt: &ModelCheckpoint,
    images: &[Array3<f64>],
    loss: &GradCheckLoss,
    samples_per_block: usize,
    sample_seed: u64,
    block_filter: impl Fn(&str) -> bool,
) -> Result<GradCheckReport, NnError> {
    let cache = match loss {
        GradCheckLoss::Mae { mask_seed } => mae_forward_loss(ckpt, images, *mask_seed)?.cache,
        GradCheckLoss::CrossEntropy { labels } => {
            forward_classifier_loss(ckpt, images, &SoftTargets::Hard(labels.clone()), None)?
        }
    };
    let (grads, _) = backprop(cache)?;

    let mut per_block = BTreeMap::new();
    let mut entries_checked = 0usize;
    for (name, analytic) in &grads.grads {
        if !block_filter(name) {
            continue;
        }
        let len = analytic.len();
        let mut indices: Vec<usize> = (0..len).collect();
        if len > samples_per_block {
            indices.shuffle(&mut rng_for(
                sample_seed,
                name,
                len as u64,
            ));
            indices.truncate(samples_per_block);
            indices.sort_unstable();
        }
        let cols = analytic.ncols();
        let mut worst = 0.0f64;
        for idx in indices {
            let (r, c) = (idx / cols, idx % cols);
            let theta = ckpt.params[name][(r, c)];
            let h = 1e-4 * theta.abs().max(1.0);
            let mut perturbed = ckpt.clone();
            perturbed.params.get_mut(name).unwrap()[(r, c)] = theta + h;
            let plus = loss_value(&perturbed, images, loss)?;
            perturbed.params.get_mut(name).unwrap()[(r, c)] = theta - h;
            let minus = loss_value(&perturbed, images, loss)?;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[(r, c)];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            worst = worst.max(rel);
            entries_checked += 1;
        }
        per_block.insert(name.clone(), worst);
    }
    Ok(GradCheckReport {
        per_block,
        entries_checked,
    })
}

/// Check every parameter block of `ckpt`: encoder and decoder blocks
/// under the masked-autoencoder loss, the classifier head under
/// cross-entropy. Returns the union report.
pub fn full_model_check(
    ckpt: &ModelCheckpoint,
    images: &[Array3<f64>],
    labels: &[usize],
    samples_per_block: usize,
    sample_seed: u64,
) -> Result<GradCheckReport, NnError> {
    let mae = finite_difference_check(
        ckpt,
        images,
        &GradCheckLoss::Mae {
            mask_seed: sample_seed,
        },
        samples_per_block,
        sample_seed,
        |_| true,
    )?;
    let head = finite_difference_check(
        ckpt,
        images,
        &GradCheckLoss::CrossEntropy {
            labels: labels.to_vec(),
        },
        samples_per_block,
        sample_seed,
        |name| name.starts_with("head."),
    )?;
    let mut per_block = mae.per_block;
    per_block.extend(head.per_block);
    Ok(GradCheckReport {
        per_block,
        entries_checked: mae.entries_checked + head.entries_checked,
    })
}
