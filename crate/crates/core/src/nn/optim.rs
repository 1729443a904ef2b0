//! Decoupled weight-decay adaptive-moment optimizer with layer-wise
//! learning-rate decay.

use super::checkpoint::{GradientSet, ModelCheckpoint};
use super::NnError;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Optimizer hyperparameters. Defaults follow the training recipe used
/// throughout the pipeline: base learning rate 5e-4, weight decay 0.02,
/// layer-wise decay 0.75.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimHyper {
    pub base_lr: f64,
    pub weight_decay: f64,
    /// Per-layer learning-rate decay; the classifier head is the
    /// shallowest layer and trains at the full base rate. Set to 1.0
    /// for a uniform rate.
    pub layerwise_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimHyper {
    fn default() -> Self {
        OptimHyper {
            base_lr: 5e-4,
            weight_decay: 0.02,
            layerwise_decay: 0.75,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl OptimHyper {
    pub fn uniform_lr(mut self) -> Self {
        self.layerwise_decay = 1.0;
        self
    }

    pub fn with_lr(mut self, lr: f64) -> Self {
        self.base_lr = lr;
        self
    }

    pub fn without_decay(mut self) -> Self {
        self.weight_decay = 0.0;
        self
    }
}

/// Learning-rate scale for a parameter. Transformer block `b` of
/// `depth` blocks trains at `decay^(depth - b)`; the embedding layer
/// sits below block 0 at `decay^(depth + 1)`; the final norm and head
/// are shallowest at scale 1. Decoder parameters (pretraining only)
/// also train at scale 1.
pub fn lr_scale(name: &str, depth: usize, decay: f64) -> f64 {
    if decay == 1.0 {
        return 1.0;
    }
    if name.starts_with("patch_embed") || name == "cls_token" || name == "pos_embed" {
        return decay.powi(depth as i32 + 1);
    }
    if let Some(rest) = name.strip_prefix("blocks.") {
        if let Some((idx, _)) = rest.split_once('.') {
            if let Ok(b) = idx.parse::<usize>() {
                return decay.powi((depth - b) as i32);
            }
        }
    }
    1.0
}

/// Adaptive-moment state mirroring the checkpoint parameters.
#[derive(Debug, Clone)]
pub struct OptimState {
    pub step_count: u64,
    pub hyper: OptimHyper,
    first_moment: BTreeMap<String, Array2<f64>>,
    second_moment: BTreeMap<String, Array2<f64>>,
}

impl OptimState {
    pub fn new(hyper: OptimHyper) -> Self {
        OptimState {
            step_count: 0,
            hyper,
            first_moment: BTreeMap::new(),
            second_moment: BTreeMap::new(),
        }
    }

    /// One decoupled weight-decay update. Parameters without a gradient
    /// entry (e.g. the head during pretraining) are left untouched.
    pub fn step(
        &mut self,
        ckpt: &mut ModelCheckpoint,
        grads: &GradientSet,
    ) -> Result<(), NnError> {
        self.step_count += 1;
        let t = self.step_count as i32;
        let h = self.hyper;
        let bias1 = 1.0 - h.beta1.powi(t);
        let bias2 = 1.0 - h.beta2.powi(t);
        for (name, grad) in &grads.grads {
            let param = ckpt.params.get_mut(name).ok_or_else(|| {
                NnError::ShapeMismatch(format!("gradient for unknown parameter '{name}'"))
            })?;
            if grad.dim() != param.dim() {
                return Err(NnError::ShapeMismatch(format!(
                    "gradient '{name}' has shape {:?}, parameter has {:?}",
                    grad.dim(),
                    param.dim()
                )));
            }
            let m = self
                .first_moment
                .entry(name.clone())
                .or_insert_with(|| Array2::zeros(grad.dim()));
            let v = self
                .second_moment
                .entry(name.clone())
                .or_insert_with(|| Array2::zeros(grad.dim()));
            let lr = h.base_lr * lr_scale(name, ckpt.arch.depth, h.layerwise_decay);
            for ((p, g), (m, v)) in param
                .iter_mut()
                .zip(grad.iter())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *m = h.beta1 * *m + (1.0 - h.beta1) * g;
                *v = h.beta2 * *v + (1.0 - h.beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p -= lr * (m_hat / (v_hat.sqrt() + h.epsilon) + h.weight_decay * *p);
            }
        }
        Ok(())
    }
}
