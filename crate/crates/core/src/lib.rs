//! End-to-end weed species identification pipeline.
//!
//! The crate covers the full workflow for building a trustworthy image
//! classifier at desk scale:
//!
//! - [`taxonomy`] / [`dataset`]: species records, curation rules, and
//!   deterministic train/test splitting.
//! - [`acquire`]: manifest-driven parallel downloading with throughput-
//!   balanced grouping, retries, and crash-safe journaling.
//! - [`autodiff`] / [`nn`]: a self-contained reverse-mode engine and a
//!   micro vision transformer with a masked-autoencoder objective.
//! - [`pipeline`]: synthetic corpus generation and the staged training
//!   workflow (pretrain, fine-tune, global-to-local, expert refinement,
//!   k-shot transfer evaluation).
//! - [`trust`]: energy-based out-of-distribution detection and split
//!   conformal prediction.
//! - [`eval`]: confusion matrices, macro metrics, ROC/PR curves, error
//!   attribution, and strata reports.
//! - [`serve`]: an HTTP prediction service with sliding-window rate
//!   limiting.

pub mod acquire;
pub mod autodiff;
pub mod container;
pub mod dataset;
pub mod eval;
pub mod nn;
pub mod numeric;
pub mod pipeline;
pub mod rng;
pub mod serve;
pub mod taxonomy;
pub mod trust;
pub mod util;

pub use dataset::{Corpus, DatasetSplit, LabeledExample};
pub use nn::{ArchConfig, GradientSet, ModelCheckpoint, OptimState, Stage};
pub use taxonomy::{ClassSet, TaxonRecord};
