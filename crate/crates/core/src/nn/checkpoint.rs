//! Model parameters, initialization, and gradient containers.

use super::arch::{ArchConfig, Stage};
use super::NnError;
use crate::rng::rng_for;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One recorded step of checkpoint provenance. Replaying the steps with
/// the stored seeds against the same inputs reproduces the checkpoint
/// byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageStep {
    pub stage: String,
    pub seed: u64,
    /// Stage-specific settings (steps, epochs, learning rate, ...).
    pub detail: serde_json::Value,
    /// Digest of the training input (corpus container).
    pub input_digest: String,
    /// Digest of the parent checkpoint, when one existed.
    pub parent: Option<String>,
}

/// All learnable state of the model plus its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub arch: ArchConfig,
    /// Named parameter matrices; names are stable and sorted.
    pub params: BTreeMap<String, Array2<f64>>,
    pub seed: u64,
    pub stage: Stage,
    pub lineage: Vec<LineageStep>,
}

/// Encoder parameter names and shapes for an architecture.
fn encoder_specs(arch: &ArchConfig) -> Vec<(String, (usize, usize))> {
    let d = arch.embed_dim;
    let mut specs = vec![
        ("patch_embed.weight".to_string(), (arch.patch_dim(), d)),
        ("patch_embed.bias".to_string(), (1, d)),
        ("cls_token".to_string(), (1, d)),
        ("pos_embed".to_string(), (arch.seq_len(), d)),
    ];
    for b in 0..arch.depth {
        specs.extend(block_specs(&format!("blocks.{b}."), d, arch.mlp_hidden()));
    }
    specs.push(("norm.gamma".to_string(), (1, d)));
    specs.push(("norm.beta".to_string(), (1, d)));
    specs
}

fn block_specs(prefix: &str, dim: usize, hidden: usize) -> Vec<(String, (usize, usize))> {
    vec![
        (format!("{prefix}norm1.gamma"), (1, dim)),
        (format!("{prefix}norm1.beta"), (1, dim)),
        (format!("{prefix}attn.qkv.weight"), (dim, 3 * dim)),
        (format!("{prefix}attn.qkv.bias"), (1, 3 * dim)),
        (format!("{prefix}attn.proj.weight"), (dim, dim)),
        (format!("{prefix}attn.proj.bias"), (1, dim)),
        (format!("{prefix}norm2.gamma"), (1, dim)),
        (format!("{prefix}norm2.beta"), (1, dim)),
        (format!("{prefix}mlp.fc1.weight"), (dim, hidden)),
        (format!("{prefix}mlp.fc1.bias"), (1, hidden)),
        (format!("{prefix}mlp.fc2.weight"), (hidden, dim)),
        (format!("{prefix}mlp.fc2.bias"), (1, dim)),
    ]
}

fn decoder_specs(arch: &ArchConfig) -> Vec<(String, (usize, usize))> {
    let d = arch.embed_dim;
    let dd = arch.decoder_dim;
    let mut specs = vec![
        ("decoder.embed.weight".to_string(), (d, dd)),
        ("decoder.embed.bias".to_string(), (1, dd)),
        ("decoder.mask_token".to_string(), (1, dd)),
        ("decoder.pos_embed".to_string(), (arch.seq_len(), dd)),
    ];
    for b in 0..arch.decoder_depth {
        specs.extend(block_specs(
            &format!("decoder.blocks.{b}."),
            dd,
            arch.decoder_mlp_hidden(),
        ));
    }
    specs.push(("decoder.norm.gamma".to_string(), (1, dd)));
    specs.push(("decoder.norm.beta".to_string(), (1, dd)));
    specs.push(("decoder.pred.weight".to_string(), (dd, arch.patch_dim())));
    specs.push(("decoder.pred.bias".to_string(), (1, arch.patch_dim())));
    specs
}

fn head_specs(arch: &ArchConfig) -> Vec<(String, (usize, usize))> {
    vec![
        ("head.weight".to_string(), (arch.embed_dim, arch.num_classes)),
        ("head.bias".to_string(), (1, arch.num_classes)),
    ]
}

/// Truncated normal: resample outside two standard deviations.
fn trunc_normal(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    use rand_distr::{Distribution, Normal};
    let dist = Normal::new(0.0, std).expect("valid normal");
    loop {
        let v = dist.sample(rng);
        if v.abs() <= 2.0 * std {
            return v;
        }
    }
}

/// Fixed 2D sine-cosine table for patch positions; row 0 (class token)
/// stays zero. The table seeds the learnable positional embeddings.
fn sincos_positions(grid: usize, dim: usize) -> Array2<f64> {
    let n = grid * grid;
    let mut out = Array2::zeros((n + 1, dim));
    let quarter = (dim / 4).max(1);
    for p in 0..n {
        let (gy, gx) = (p / grid, p % grid);
        for k in 0..quarter {
            let omega = 1.0 / 10_000f64.powf(k as f64 / quarter as f64);
            let (sy, cy) = (gy as f64 * omega).sin_cos();
            let (sx, cx) = (gx as f64 * omega).sin_cos();
            let base = 4 * k;
            if base + 3 < dim {
                out[(p + 1, base)] = sx;
                out[(p + 1, base + 1)] = cx;
                out[(p + 1, base + 2)] = sy;
                out[(p + 1, base + 3)] = cy;
            }
        }
    }
    out
}

fn init_param(name: &str, shape: (usize, usize), arch: &ArchConfig, seed: u64) -> Array2<f64> {
    if name.ends_with(".bias") || name.ends_with(".beta") {
        return Array2::zeros(shape);
    }
    if name.ends_with(".gamma") {
        return Array2::ones(shape);
    }
    if name == "pos_embed" {
        return sincos_positions(arch.grid(), arch.embed_dim);
    }
    if name == "decoder.pos_embed" {
        return sincos_positions(arch.grid(), arch.decoder_dim);
    }
    let mut rng = rng_for(seed, "init", crate::rng::derive_seed(0, name, 0));
    Array2::from_shape_fn(shape, |_| trunc_normal(&mut rng, 0.02))
}

impl ModelCheckpoint {
    /// Random initialization with encoder, decoder, and classifier head.
    pub fn init(arch: ArchConfig, seed: u64) -> Result<Self, NnError> {
        arch.validate()?;
        let mut params = BTreeMap::new();
        for (name, shape) in encoder_specs(&arch)
            .into_iter()
            .chain(decoder_specs(&arch))
            .chain(head_specs(&arch))
        {
            params.insert(name.clone(), init_param(&name, shape, &arch, seed));
        }
        Ok(ModelCheckpoint {
            arch,
            params,
            seed,
            stage: Stage::Random,
            lineage: Vec::new(),
        })
    }

    pub fn has_head(&self) -> bool {
        self.params.contains_key("head.weight")
    }

    pub fn has_decoder(&self) -> bool {
        self.params.contains_key("decoder.pred.weight")
    }

    /// Drop the reconstruction decoder (done when fine-tuning begins).
    pub fn strip_decoder(&mut self) {
        self.params.retain(|name, _| !name.starts_with("decoder."));
    }

    /// Replace the classifier head with a fresh one for `num_classes`.
    pub fn reset_head(&mut self, num_classes: usize, seed: u64) {
        self.arch.num_classes = num_classes;
        for (name, shape) in head_specs(&self.arch) {
            self.params
                .insert(name.clone(), init_param(&name, shape, &self.arch, seed));
        }
    }

    pub fn param(&self, name: &str) -> Result<&Array2<f64>, NnError> {
        self.params
            .get(name)
            .ok_or_else(|| NnError::Format(format!("missing parameter '{name}'")))
    }

    /// Check that every present parameter has the shape derived from the
    /// architecture and only finite values.
    pub fn validate(&self) -> Result<(), NnError> {
        self.arch.validate()?;
        let mut expected: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for (n, s) in encoder_specs(&self.arch)
            .into_iter()
            .chain(decoder_specs(&self.arch))
            .chain(head_specs(&self.arch))
        {
            expected.insert(n, s);
        }
        for (name, value) in &self.params {
            let Some(&shape) = expected.get(name) else {
                return Err(NnError::Format(format!("unexpected parameter '{name}'")));
            };
            if value.dim() != shape {
                return Err(NnError::ShapeMismatch(format!(
                    "parameter '{name}' has shape {:?}, expected {:?}",
                    value.dim(),
                    shape
                )));
            }
            if value.iter().any(|v| !v.is_finite()) {
                return Err(NnError::Format(format!(
                    "parameter '{name}' contains non-finite values"
                )));
            }
        }
        // Encoder parameters must always be present.
        for (name, _) in encoder_specs(&self.arch) {
            if !self.params.contains_key(&name) {
                return Err(NnError::Format(format!("missing parameter '{name}'")));
            }
        }
        Ok(())
    }

    pub fn scalar_parameter_count(&self) -> usize {
        self.params.values().map(|v| v.len()).sum()
    }

    pub fn push_lineage(&mut self, step: LineageStep) {
        self.lineage.push(step);
    }
}

/// Per-parameter gradients, mirroring the checkpoint layout.
#[derive(Debug, Clone, Default)]
pub struct GradientSet {
    pub grads: BTreeMap<String, Array2<f64>>,
}

impl GradientSet {
    pub fn get(&self, name: &str) -> Option<&Array2<f64>> {
        self.grads.get(name)
    }

    pub fn max_abs(&self) -> f64 {
        self.grads
            .values()
            .flat_map(|g| g.iter())
            .fold(0.0, |acc: f64, &v| acc.max(v.abs()))
    }

    pub fn assert_finite(&self) -> Result<(), NnError> {
        for (name, g) in &self.grads {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(NnError::Format(format!(
                    "gradient '{name}' contains non-finite values"
                )));
            }
        }
        Ok(())
    }
}

pub(super) fn random_like(rng: &mut ChaCha8Rng, shape: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_fn(shape, |_| rng.random_range(-0.5..0.5))
}
