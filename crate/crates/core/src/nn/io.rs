//! Checkpoint serialization.
//!
//! Checkpoints use the shared container format (see [`crate::container`]):
//! a JSON header carrying the architecture, seed, stage, and lineage,
//! followed by the parameter matrices as little-endian f64 arrays in
//! sorted name order. Serialization is byte-for-byte reproducible, so
//! training determinism can be asserted by comparing files directly.

use super::arch::{ArchConfig, Stage};
use super::checkpoint::{LineageStep, ModelCheckpoint};
use super::NnError;
use crate::container::Container;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    arch: ArchConfig,
    seed: u64,
    stage: Stage,
    lineage: Vec<LineageStep>,
}

impl ModelCheckpoint {
    pub fn to_container(&self) -> Container {
        let meta = CheckpointMeta {
            arch: self.arch.clone(),
            seed: self.seed,
            stage: self.stage,
            lineage: self.lineage.clone(),
        };
        let mut c = Container::new(
            "checkpoint",
            serde_json::to_value(&meta).expect("meta serializes"),
        );
        // BTreeMap iteration gives sorted, stable array order.
        for (name, value) in &self.params {
            c.push_array(
                name.clone(),
                vec![value.nrows(), value.ncols()],
                value.iter().cloned().collect(),
            )
            .expect("unique parameter names");
        }
        c
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_container().to_bytes()
    }

    pub fn from_container(c: &Container) -> Result<Self, NnError> {
        if c.kind != "checkpoint" {
            return Err(NnError::Format(format!(
                "container kind '{}' is not a checkpoint",
                c.kind
            )));
        }
        let meta: CheckpointMeta = serde_json::from_value(c.meta.clone())
            .map_err(|e| NnError::Format(format!("checkpoint meta: {e}")))?;
        let mut params = BTreeMap::new();
        for (name, shape, data) in c.arrays() {
            if shape.len() != 2 {
                return Err(NnError::Format(format!(
                    "parameter '{name}' has rank {}, expected 2",
                    shape.len()
                )));
            }
            let arr = Array2::from_shape_vec((shape[0], shape[1]), data.to_vec())
                .map_err(|e| NnError::Format(format!("parameter '{name}': {e}")))?;
            params.insert(name.to_string(), arr);
        }
        let ckpt = ModelCheckpoint {
            arch: meta.arch,
            params,
            seed: meta.seed,
            stage: meta.stage,
            lineage: meta.lineage,
        };
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnError> {
        Self::from_container(&Container::from_bytes(bytes)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), NnError> {
        crate::util::write_atomic(path, &self.to_bytes())
            .map_err(|e| NnError::Format(format!("write checkpoint: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self, NnError> {
        let bytes = std::fs::read(path)
            .map_err(|e| NnError::Format(format!("read checkpoint: {e}")))?;
        Self::from_bytes(&bytes)
    }
}

/// Content digest of a checkpoint's serialized form.
pub fn checkpoint_digest(ckpt: &ModelCheckpoint) -> String {
    crate::util::sha256_hex(&ckpt.to_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_round_trip_is_exact() {
        let arch = ArchConfig::default().with_classes(4);
        let mut ckpt = ModelCheckpoint::init(arch, 11).unwrap();
        ckpt.stage = Stage::Pretrained;
        ckpt.push_lineage(LineageStep {
            stage: "pretrain".into(),
            seed: 11,
            detail: serde_json::json!({"steps": 5}),
            input_digest: "abc".into(),
            parent: None,
        });
        let bytes = ckpt.to_bytes();
        let back = ModelCheckpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(checkpoint_digest(&back), checkpoint_digest(&ckpt));
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let c = Container::new("corpus", serde_json::Value::Null);
        assert!(matches!(
            ModelCheckpoint::from_container(&c),
            Err(NnError::Format(_))
        ));
    }
}
