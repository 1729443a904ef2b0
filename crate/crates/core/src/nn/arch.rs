//! Architecture configuration and checkpoint staging.

use super::NnError;
use serde::{Deserialize, Serialize};

/// Hyperparameters that fix every parameter shape of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub image_size: usize,
    pub patch_size: usize,
    pub channels: usize,
    pub embed_dim: usize,
    /// Encoder transformer blocks.
    pub depth: usize,
    pub heads: usize,
    pub mlp_ratio: f64,
    pub decoder_dim: usize,
    pub decoder_depth: usize,
    /// Fraction of patches hidden from the encoder during pretraining.
    pub mask_ratio: f64,
    pub num_classes: usize,
    /// Stochastic-depth rate; applied only on supervised training
    /// forward passes, never during evaluation or gradient checks.
    pub drop_path_rate: f64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            image_size: 32,
            patch_size: 4,
            channels: 1,
            embed_dim: 64,
            depth: 2,
            heads: 2,
            mlp_ratio: 4.0,
            decoder_dim: 32,
            decoder_depth: 1,
            mask_ratio: 0.75,
            num_classes: 10,
            drop_path_rate: 0.1,
        }
    }
}

impl ArchConfig {
    pub fn with_classes(mut self, num_classes: usize) -> Self {
        self.num_classes = num_classes;
        self
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.image_size == 0 || self.patch_size == 0 || self.image_size % self.patch_size != 0
        {
            return Err(NnError::InvalidArch(format!(
                "image_size {} must be a positive multiple of patch_size {}",
                self.image_size, self.patch_size
            )));
        }
        if self.embed_dim == 0 || self.heads == 0 || self.embed_dim % self.heads != 0 {
            return Err(NnError::InvalidArch(format!(
                "embed_dim {} must be a positive multiple of heads {}",
                self.embed_dim, self.heads
            )));
        }
        if self.decoder_dim == 0 || self.decoder_dim % self.heads != 0 {
            return Err(NnError::InvalidArch(format!(
                "decoder_dim {} must be a positive multiple of heads {}",
                self.decoder_dim, self.heads
            )));
        }
        if !(self.mask_ratio > 0.0 && self.mask_ratio < 1.0) {
            return Err(NnError::InvalidArch(format!(
                "mask_ratio {} must lie in (0, 1)",
                self.mask_ratio
            )));
        }
        let masked = self.masked_patch_count();
        if masked == 0 || masked >= self.num_patches() {
            return Err(NnError::InvalidArch(format!(
                "mask_ratio {} leaves {} of {} patches masked",
                self.mask_ratio,
                masked,
                self.num_patches()
            )));
        }
        if self.num_classes == 0 {
            return Err(NnError::InvalidArch("num_classes must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.drop_path_rate) {
            return Err(NnError::InvalidArch(format!(
                "drop_path_rate {} must lie in [0, 1)",
                self.drop_path_rate
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> usize {
        self.image_size / self.patch_size
    }

    pub fn num_patches(&self) -> usize {
        self.grid() * self.grid()
    }

    /// Patches plus the class token.
    pub fn seq_len(&self) -> usize {
        self.num_patches() + 1
    }

    pub fn patch_dim(&self) -> usize {
        self.patch_size * self.patch_size * self.channels
    }

    pub fn mlp_hidden(&self) -> usize {
        (self.embed_dim as f64 * self.mlp_ratio).round() as usize
    }

    pub fn decoder_mlp_hidden(&self) -> usize {
        (self.decoder_dim as f64 * self.mlp_ratio).round() as usize
    }

    /// Exactly `round(mask_ratio * num_patches)` patches are masked.
    pub fn masked_patch_count(&self) -> usize {
        (self.mask_ratio * self.num_patches() as f64).round() as usize
    }
}

/// Provenance stage of a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Random,
    Pretrained,
    Finetuned,
    Local,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Random => "random",
            Stage::Pretrained => "pretrained",
            Stage::Finetuned => "finetuned",
            Stage::Local => "local",
        };
        f.write_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_arch_is_valid_and_tiny() {
        let arch = ArchConfig::default();
        arch.validate().unwrap();
        assert_eq!(arch.num_patches(), 64);
        assert_eq!(arch.patch_dim(), 16);
        assert_eq!(arch.seq_len(), 65);
        assert_eq!(arch.mlp_hidden(), 256);
    }

    #[test]
    fn mask_count_follows_rounding() {
        let mut arch = ArchConfig {
            image_size: 16,
            ..ArchConfig::default()
        };
        // 16 patches at ratio 0.75 -> exactly 12 masked.
        assert_eq!(arch.num_patches(), 16);
        assert_eq!(arch.masked_patch_count(), 12);
        arch.mask_ratio = 0.5;
        assert_eq!(arch.masked_patch_count(), 8);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut arch = ArchConfig::default();
        arch.patch_size = 5;
        assert!(arch.validate().is_err());
        let mut arch = ArchConfig::default();
        arch.heads = 3;
        assert!(arch.validate().is_err());
        let mut arch = ArchConfig::default();
        arch.mask_ratio = 1.0;
        assert!(arch.validate().is_err());
    }
}
