//! Corpus serialization in the shared container format: a JSON header
//! with the class set and per-example metadata, plus one f64 pixel
//! array. Writing is deterministic, so corpus digests can stand in for
//! content identity.

use super::PipelineError;
use crate::container::Container;
use crate::dataset::{Corpus, LabeledExample};
use crate::taxonomy::ClassSet;
use ndarray::Array3;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct ExampleMeta {
    id: String,
    label: usize,
    tags: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CorpusMeta {
    class_set: ClassSet,
    height: usize,
    width: usize,
    channels: usize,
    examples: Vec<ExampleMeta>,
}

pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<(), PipelineError> {
    corpus.validate()?;
    let (h, w, c) = corpus
        .examples
        .first()
        .map(|e| e.image.dim())
        .unwrap_or((0, 0, 0));
    let meta = CorpusMeta {
        class_set: corpus.class_set.clone(),
        height: h,
        width: w,
        channels: c,
        examples: corpus
            .examples
            .iter()
            .map(|e| ExampleMeta {
                id: e.example_id.clone(),
                label: e.label,
                tags: e.strata_tags.iter().cloned().collect(),
            })
            .collect(),
    };
    let mut container = Container::new(
        "corpus",
        serde_json::to_value(&meta).map_err(|e| PipelineError::BadCorpus(e.to_string()))?,
    );
    let mut pixels = Vec::with_capacity(corpus.examples.len() * h * w * c);
    for e in &corpus.examples {
        pixels.extend(e.image.iter().cloned());
    }
    container.push_array("pixels", vec![corpus.examples.len(), h * w * c], pixels)?;
    container.write(path)?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<Corpus, PipelineError> {
    let container = Container::read(path)?;
    if container.kind != "corpus" {
        return Err(PipelineError::BadCorpus(format!(
            "container kind '{}' is not a corpus",
            container.kind
        )));
    }
    let meta: CorpusMeta = serde_json::from_value(container.meta.clone())
        .map_err(|e| PipelineError::BadCorpus(e.to_string()))?;
    let (_, pixels) = container
        .array("pixels")
        .ok_or_else(|| PipelineError::BadCorpus("missing pixels array".into()))?;
    let stride = meta.height * meta.width * meta.channels;
    if pixels.len() != meta.examples.len() * stride {
        return Err(PipelineError::BadCorpus(format!(
            "pixel payload has {} values, expected {}",
            pixels.len(),
            meta.examples.len() * stride
        )));
    }
    let mut examples = Vec::with_capacity(meta.examples.len());
    for (i, em) in meta.examples.iter().enumerate() {
        let chunk = &pixels[i * stride..(i + 1) * stride];
        let image = Array3::from_shape_vec(
            (meta.height, meta.width, meta.channels),
            chunk.to_vec(),
        )
        .map_err(|e| PipelineError::BadCorpus(e.to_string()))?;
        examples.push(
            LabeledExample::new(em.id.clone(), image, em.label).with_tags(em.tags.clone()),
        );
    }
    let corpus = Corpus {
        class_set: meta.class_set,
        examples,
    };
    corpus.validate()?;
    Ok(corpus)
}

/// Digest of the serialized corpus (used in lineage records).
pub fn corpus_digest(corpus: &Corpus) -> Result<String, PipelineError> {
    corpus.validate()?;
    let (h, w, c) = corpus
        .examples
        .first()
        .map(|e| e.image.dim())
        .unwrap_or((0, 0, 0));
    let meta = CorpusMeta {
        class_set: corpus.class_set.clone(),
        height: h,
        width: w,
        channels: c,
        examples: corpus
            .examples
            .iter()
            .map(|e| ExampleMeta {
                id: e.example_id.clone(),
                label: e.label,
                tags: e.strata_tags.iter().cloned().collect(),
            })
            .collect(),
    };
    let mut container = Container::new(
        "corpus",
        serde_json::to_value(&meta).map_err(|e| PipelineError::BadCorpus(e.to_string()))?,
    );
    let mut pixels = Vec::with_capacity(corpus.examples.len() * h * w * c);
    for e in &corpus.examples {
        pixels.extend(e.image.iter().cloned());
    }
    container.push_array("pixels", vec![corpus.examples.len(), h * w * c], pixels)?;
    Ok(crate::util::sha256_hex(&container.to_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::synth::{generate_synthetic, SynthConfig};

    #[test]
    fn corpus_file_round_trip() {
        let corpus = generate_synthetic(&SynthConfig {
            num_classes: 2,
            examples_per_class: 3,
            image_size: 8,
            lookalike_pairs: vec![],
            ..SynthConfig::default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.bin");
        write_corpus(&corpus, &path).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back.class_set, corpus.class_set);
        assert_eq!(back.examples.len(), corpus.examples.len());
        for (a, b) in corpus.examples.iter().zip(&back.examples) {
            assert_eq!(a.image, b.image);
            assert_eq!(a.strata_tags, b.strata_tags);
            assert_eq!(a.example_id, b.example_id);
        }
        // Digest matches the file bytes exactly.
        assert_eq!(
            corpus_digest(&corpus).unwrap(),
            crate::util::sha256_file(&path).unwrap()
        );
    }
}
