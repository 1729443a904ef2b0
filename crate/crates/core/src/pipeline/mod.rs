//! Staged training workflow: synthetic corpora, masked-autoencoder
//! pretraining, supervised fine-tuning, global-to-local specialization,
//! expert-data refinement, and k-shot transfer evaluation.

mod config;
mod corpus_io;
mod kshot;
mod loader;
mod probe;
mod stages;
mod synth;
mod train;

pub use config::PipelineConfig;
pub use corpus_io::{corpus_digest, read_corpus, write_corpus};
pub use kshot::{build_name_mapping, kshot_evaluate, kshot_table, KShotRow, KShotSpec, KValue};
pub use loader::load_folder_corpus;
pub use probe::{train_linear_probe, LinearProbe, ProbeOptions};
pub use stages::{
    finetune_classifier, global_to_local, refine_with_expert, RefineReport, RefineRow,
    StageReport,
};
pub use synth::{generate_synthetic, LookalikePair, SynthConfig};
pub use train::{evaluate_checkpoint, predict_probs, pretrain_mae, PretrainOptions, TrainOptions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("subset class '{0}' is not part of the global class set")]
    UnknownSubsetClass(String),
    #[error("unknown class id {0}")]
    UnknownClass(usize),
    #[error("class {class_id} has {available} train examples, k-shot needs {requested}")]
    InsufficientExamples {
        class_id: usize,
        available: usize,
        requested: usize,
    },
    #[error("zero-shot evaluation needs a class mapping and none could be built")]
    MissingMapping,
    #[error("checkpoint expects {ckpt} classes, corpus has {corpus}")]
    ClassCountMismatch { ckpt: usize, corpus: usize },
    #[error("corpus: {0}")]
    BadCorpus(String),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    Taxonomy(#[from] crate::taxonomy::TaxonomyError),
    #[error(transparent)]
    Container(#[from] crate::container::ContainerError),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
