//! Micro vision transformer with a masked-autoencoder objective.
//!
//! The default architecture is deliberately tiny (32px images, 4px
//! patches, 64-dim encoder) so that full training runs finish in seconds
//! on a CPU while exercising the same staging logic as a full-scale
//! model. All arithmetic is f64 and every forward pass records a tape
//! for exact reverse-mode gradients.

mod arch;
mod augment;
mod checkpoint;
mod forward;
pub mod gradcheck;
mod io;
mod optim;

pub use arch::{ArchConfig, Stage};
pub use augment::{augment_batch, cutmix_pair, hflip, mixup_pair, AugmentNoise, AugmentPolicy, AugmentedBatch};
pub use checkpoint::{GradientSet, LineageStep, ModelCheckpoint};
pub use forward::{
    backprop, embed_batch, forward_classifier_loss, forward_vit, mae_forward_loss, masked_mse,
    ForwardCache, ForwardOutput, LossKind, MaeOutput, Pooling, SoftTargets,
};
pub use io::checkpoint_digest;
pub use optim::{lr_scale, OptimHyper, OptimState};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("forward cache has no loss attached; rebuild with a loss before backprop")]
    StaleCache,
    #[error("checkpoint has {ckpt} classes but task has {task}")]
    ClassCountMismatch { ckpt: usize, task: usize },
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error(transparent)]
    Container(#[from] crate::container::ContainerError),
    #[error(transparent)]
    Autodiff(#[from] crate::autodiff::AutodiffError),
}
