//! Labeled examples, corpora, and deterministic train/test splitting.

use crate::rng::rng_for;
use crate::taxonomy::ClassSet;
use ndarray::Array3;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("class {class_id} has {available} examples, cannot hold out {requested}")]
    InsufficientExamples {
        class_id: usize,
        available: usize,
        requested: usize,
    },
    #[error("label {label} out of range for {classes} classes (example '{example_id}')")]
    LabelOutOfRange {
        label: usize,
        classes: usize,
        example_id: String,
    },
    #[error("example '{0}' has dimensions {1}x{2}x{3}, expected {4}x{5}x{6}")]
    DimensionMismatch(String, usize, usize, usize, usize, usize, usize),
}

/// One image with its label and free-form strata tags
/// (e.g. "early-stage", "lookalike:grass", "collar-region").
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    /// Stable identity used for split disjointness and journaling.
    pub example_id: String,
    /// Height x width x channels raster with values in [0, 1].
    pub image: Array3<f64>,
    pub label: usize,
    pub strata_tags: BTreeSet<String>,
}

impl LabeledExample {
    pub fn new(example_id: impl Into<String>, image: Array3<f64>, label: usize) -> Self {
        LabeledExample {
            example_id: example_id.into(),
            image,
            label,
            strata_tags: BTreeSet::new(),
        }
    }

    pub fn with_tags<I: IntoIterator<Item = S>, S: Into<String>>(mut self, tags: I) -> Self {
        self.strata_tags = tags.into_iter().map(Into::into).collect();
        self
    }
}

/// A class set together with its examples.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub class_set: ClassSet,
    pub examples: Vec<LabeledExample>,
}

impl Corpus {
    /// Validate label ranges and uniform image dimensions.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let c = self.class_set.len();
        let dims = self.examples.first().map(|e| e.image.dim());
        for e in &self.examples {
            if e.label >= c {
                return Err(DatasetError::LabelOutOfRange {
                    label: e.label,
                    classes: c,
                    example_id: e.example_id.clone(),
                });
            }
            if let Some((h, w, ch)) = dims {
                let (eh, ew, ec) = e.image.dim();
                if (eh, ew, ec) != (h, w, ch) {
                    return Err(DatasetError::DimensionMismatch(
                        e.example_id.clone(),
                        eh,
                        ew,
                        ec,
                        h,
                        w,
                        ch,
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Whether the held-out examples are further divided into test and
/// validation halves. The default keeps a single held-out set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HoldoutMode {
    #[default]
    TestOnly,
    /// Split the held-out examples 50/50 into test and validation.
    TestValHalves,
}

/// Disjoint train/test (and optional validation) example lists.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    /// Empty unless [`HoldoutMode::TestValHalves`] was requested.
    pub val: Vec<LabeledExample>,
    pub per_class_test_count: usize,
}

/// Hold out exactly `per_class_test` examples per class, sampled
/// uniformly without replacement, deterministically under `seed`.
pub fn split_dataset(
    examples: &[LabeledExample],
    per_class_test: usize,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    split_dataset_with(examples, per_class_test, seed, HoldoutMode::TestOnly)
}

pub fn split_dataset_with(
    examples: &[LabeledExample],
    per_class_test: usize,
    seed: u64,
    mode: HoldoutMode,
) -> Result<DatasetSplit, DatasetError> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, e) in examples.iter().enumerate() {
        by_class.entry(e.label).or_default().push(i);
    }

    let mut held = BTreeSet::new();
    for (&class_id, indices) in &by_class {
        if indices.len() <= per_class_test {
            return Err(DatasetError::InsufficientExamples {
                class_id,
                available: indices.len(),
                requested: per_class_test,
            });
        }
        let mut pool = indices.clone();
        pool.shuffle(&mut rng_for(seed, "split", class_id as u64));
        held.extend(pool.into_iter().take(per_class_test));
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut val = Vec::new();
    // Original corpus order within each output list keeps splits stable.
    let mut held_rank: BTreeMap<usize, usize> = BTreeMap::new();
    for (rank, &i) in held.iter().enumerate() {
        held_rank.insert(i, rank);
    }
    for (i, e) in examples.iter().enumerate() {
        match held_rank.get(&i) {
            None => train.push(e.clone()),
            Some(_) => match mode {
                HoldoutMode::TestOnly => test.push(e.clone()),
                HoldoutMode::TestValHalves => {
                    // Alternate within each class so both halves stay
                    // class-balanced.
                    let n_before = test
                        .iter()
                        .chain(val.iter())
                        .filter(|x| x.label == e.label)
                        .count();
                    if n_before % 2 == 0 {
                        test.push(e.clone());
                    } else {
                        val.push(e.clone());
                    }
                }
            },
        }
    }

    Ok(DatasetSplit {
        train,
        test,
        val,
        per_class_test_count: per_class_test,
    })
}

/// One line of the newline-delimited JSON split serialization.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SplitRecord {
    pub example_id: String,
    pub split: String,
}

impl DatasetSplit {
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for (list, tag) in [(&self.train, "train"), (&self.test, "test"), (&self.val, "val")] {
            for e in list {
                let rec = SplitRecord {
                    example_id: e.example_id.clone(),
                    split: tag.to_string(),
                };
                out.push_str(&serde_json::to_string(&rec).expect("serializable record"));
                out.push('\n');
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::TaxonRecord;
    use ndarray::Array3;
    use proptest::prelude::*;

    pub(crate) fn tiny_example(id: usize, label: usize) -> LabeledExample {
        let image = Array3::from_elem((2, 2, 1), (id % 7) as f64 / 7.0);
        LabeledExample::new(format!("ex-{id}"), image, label)
    }

    fn corpus(classes: usize, per_class: usize) -> Vec<LabeledExample> {
        let mut out = Vec::new();
        for c in 0..classes {
            for i in 0..per_class {
                out.push(tiny_example(c * per_class + i, c));
            }
        }
        out
    }

    #[test]
    fn counts_are_forced_by_arithmetic() {
        let split = split_dataset(&corpus(3, 30), 20, 11).unwrap();
        assert_eq!(split.test.len(), 60);
        assert_eq!(split.train.len(), 30);
        assert!(split.val.is_empty());
    }

    #[test]
    fn same_seed_gives_identical_splits() {
        let data = corpus(4, 25);
        let a = split_dataset(&data, 5, 99).unwrap();
        let b = split_dataset(&data, 5, 99).unwrap();
        assert_eq!(a.to_ndjson(), b.to_ndjson());
        let c = split_dataset(&data, 5, 100).unwrap();
        assert_ne!(a.to_ndjson(), c.to_ndjson());
    }

    #[test]
    fn insufficient_class_is_an_error() {
        let err = split_dataset(&corpus(2, 20), 21, 0);
        match err {
            Err(DatasetError::InsufficientExamples { class_id, .. }) => assert_eq!(class_id, 0),
            other => panic!("expected InsufficientExamples, got {other:?}"),
        }
        // Holding out every example is also an error: train would be empty.
        assert!(split_dataset(&corpus(2, 20), 20, 0).is_err());
    }

    #[test]
    fn val_halves_balance_classes() {
        let split =
            split_dataset_with(&corpus(3, 30), 20, 7, HoldoutMode::TestValHalves).unwrap();
        assert_eq!(split.test.len(), 30);
        assert_eq!(split.val.len(), 30);
        for c in 0..3 {
            assert_eq!(split.test.iter().filter(|e| e.label == c).count(), 10);
        }
    }

    #[test]
    fn corpus_validation_catches_bad_labels() {
        let class_set = ClassSet::new(
            "one",
            vec![TaxonRecord {
                class_id: 0,
                scientific_name: "Zea mays".into(),
                common_name: "corn".into(),
                genus: "Zea".into(),
                family: "Poaceae".into(),
                image_count: 4,
            }],
        )
        .unwrap();
        let corpus = Corpus {
            class_set,
            examples: vec![tiny_example(0, 1)],
        };
        assert!(matches!(
            corpus.validate(),
            Err(DatasetError::LabelOutOfRange { .. })
        ));
    }

    proptest! {
        #[test]
        fn split_partitions_for_all_seeds(
            classes in 1usize..5,
            per_class in 2usize..12,
            holdout in 1usize..4,
            seed in any::<u64>(),
        ) {
            prop_assume!(per_class > holdout);
            let data = corpus(classes, per_class);
            let split = split_dataset(&data, holdout, seed).unwrap();
            prop_assert_eq!(split.train.len() + split.test.len(), data.len());
            let train_ids: BTreeSet<_> =
                split.train.iter().map(|e| e.example_id.clone()).collect();
            let test_ids: BTreeSet<_> =
                split.test.iter().map(|e| e.example_id.clone()).collect();
            prop_assert!(train_ids.is_disjoint(&test_ids));
            for c in 0..classes {
                prop_assert_eq!(
                    split.test.iter().filter(|e| e.label == c).count(),
                    holdout
                );
            }
        }
    }
}
