//! Binary container for named float arrays (checkpoints, corpora).
//!
//! Byte layout, all integers little-endian:
//!
//! ```text
//! offset 0   8 bytes   magic "PIDBIN01"
//! offset 8   4 bytes   u32 header length H
//! offset 12  H bytes   UTF-8 JSON header
//! offset 12+H          payload: f64 arrays, concatenated
//! ```
//!
//! The JSON header is `{"kind": ..., "meta": ..., "arrays": [...]}` where
//! each array entry records `name`, `shape`, and `offset`/`len` counted in
//! f64 elements from the start of the payload. Payload floats are IEEE 754
//! binary64, little-endian, in header order. Writers emit arrays in the
//! order they were added, so byte-for-byte reproducibility holds whenever
//! the producer inserts arrays deterministically.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::io;
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 8] = b"PIDBIN01";

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic; not a container file")]
    BadMagic,
    #[error("truncated container ({0})")]
    Truncated(&'static str),
    #[error("array shape {shape:?} does not match {len} elements")]
    ShapeMismatch { shape: Vec<usize>, len: usize },
    #[error("duplicate array name '{0}'")]
    DuplicateArray(String),
    #[error("header json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: Value,
    arrays: Vec<ArrayEntry>,
}

/// An in-memory container of named f64 arrays plus a JSON `meta` blob.
#[derive(Debug, Clone)]
pub struct Container {
    pub kind: String,
    pub meta: Value,
    arrays: Vec<(String, Vec<usize>, Vec<f64>)>,
}

impl Container {
    pub fn new(kind: impl Into<String>, meta: Value) -> Self {
        Container {
            kind: kind.into(),
            meta,
            arrays: Vec::new(),
        }
    }

    /// Append an array; `shape` must multiply out to `data.len()`.
    pub fn push_array(
        &mut self,
        name: impl Into<String>,
        shape: Vec<usize>,
        data: Vec<f64>,
    ) -> Result<(), ContainerError> {
        let name = name.into();
        if self.arrays.iter().any(|(n, _, _)| *n == name) {
            return Err(ContainerError::DuplicateArray(name));
        }
        if shape.iter().product::<usize>() != data.len() {
            return Err(ContainerError::ShapeMismatch {
                shape,
                len: data.len(),
            });
        }
        self.arrays.push((name, shape, data));
        Ok(())
    }

    pub fn array_names(&self) -> impl Iterator<Item = &str> {
        self.arrays.iter().map(|(n, _, _)| n.as_str())
    }

    pub fn array(&self, name: &str) -> Option<(&[usize], &[f64])> {
        self.arrays
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, s, d)| (s.as_slice(), d.as_slice()))
    }

    pub fn arrays(&self) -> impl Iterator<Item = (&str, &[usize], &[f64])> {
        self.arrays
            .iter()
            .map(|(n, s, d)| (n.as_str(), s.as_slice(), d.as_slice()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut entries = Vec::new();
        let mut offset = 0usize;
        for (name, shape, data) in &self.arrays {
            entries.push(ArrayEntry {
                name: name.clone(),
                shape: shape.clone(),
                offset,
                len: data.len(),
            });
            offset += data.len();
        }
        let header = Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            arrays: entries,
        };
        let header_bytes = serde_json::to_vec(&header).expect("header serializes");
        let payload_len: usize = self.arrays.iter().map(|(_, _, d)| d.len()).sum();
        let mut out = Vec::with_capacity(12 + header_bytes.len() + payload_len * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header_bytes.len() as u32).to_le_bytes());
        out.extend_from_slice(&header_bytes);
        for (_, _, data) in &self.arrays {
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContainerError> {
        if bytes.len() < 12 || &bytes[0..8] != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let header_end = 12 + hlen;
        if bytes.len() < header_end {
            return Err(ContainerError::Truncated("header"));
        }
        let header: Header = serde_json::from_slice(&bytes[12..header_end])?;
        let payload = &bytes[header_end..];
        let mut arrays = Vec::with_capacity(header.arrays.len());
        for e in header.arrays {
            let start = e.offset * 8;
            let end = start + e.len * 8;
            if payload.len() < end {
                return Err(ContainerError::Truncated("payload"));
            }
            let data: Vec<f64> = payload[start..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if e.shape.iter().product::<usize>() != data.len() {
                return Err(ContainerError::ShapeMismatch {
                    shape: e.shape,
                    len: data.len(),
                });
            }
            arrays.push((e.name, e.shape, data));
        }
        Ok(Container {
            kind: header.kind,
            meta: header.meta,
            arrays,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), ContainerError> {
        crate::util::write_atomic(path, &self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, ContainerError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
