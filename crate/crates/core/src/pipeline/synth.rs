//! Procedural corpus generation.
//!
//! Each class is a smooth field built from Gaussian blobs and a plane
//! wave; instances warp the field with an affine deformation whose
//! magnitude plays the role of growth stage. Look-alike pairs mix the
//! fields of two classes toward their shared mean, which directly
//! controls inter-class similarity.

use super::PipelineError;
use crate::dataset::{Corpus, LabeledExample};
use crate::rng::rng_for;
use crate::taxonomy::{ClassSet, TaxonRecord};
use ndarray::Array3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookalikePair {
    pub a: usize,
    pub b: usize,
    /// 0 leaves both classes unchanged; 1 collapses them onto the same
    /// shared field.
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub examples_per_class: usize,
    pub image_size: usize,
    pub channels: usize,
    /// Strength of per-instance warping ("growth-stage" deformation).
    pub intra_class_variation: f64,
    pub lookalike_pairs: Vec<LookalikePair>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_classes: 12,
            examples_per_class: 50,
            image_size: 32,
            channels: 1,
            intra_class_variation: 0.6,
            lookalike_pairs: vec![
                LookalikePair { a: 0, b: 1, similarity: 0.6 },
                LookalikePair { a: 2, b: 3, similarity: 0.6 },
                LookalikePair { a: 4, b: 5, similarity: 0.5 },
            ],
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), PipelineError> {
        if self.num_classes < 2 {
            return Err(PipelineError::Config("num_classes must be >= 2".into()));
        }
        if self.examples_per_class < 2 {
            return Err(PipelineError::Config(
                "examples_per_class must be >= 2".into(),
            ));
        }
        if self.intra_class_variation < 0.0 {
            return Err(PipelineError::Config(
                "intra_class_variation must be >= 0".into(),
            ));
        }
        for p in &self.lookalike_pairs {
            if p.a >= self.num_classes || p.b >= self.num_classes || p.a == p.b {
                return Err(PipelineError::Config(format!(
                    "lookalike pair ({}, {}) out of range",
                    p.a, p.b
                )));
            }
            if !(0.0..=1.0).contains(&p.similarity) {
                return Err(PipelineError::Config(format!(
                    "similarity {} must lie in [0, 1]",
                    p.similarity
                )));
            }
        }
        Ok(())
    }
}

struct Blob {
    cx: f64,
    cy: f64,
    sigma: f64,
    amp: f64,
}

struct Proto {
    base: f64,
    blobs: Vec<Blob>,
    wave_fx: f64,
    wave_fy: f64,
    wave_phase: f64,
    wave_amp: f64,
}

impl Proto {
    fn sample(seed: u64, class: usize) -> Self {
        let mut rng = rng_for(seed, "synth-proto", class as u64);
        let blob_count = rng.random_range(2..=4);
        let blobs = (0..blob_count)
            .map(|_| Blob {
                cx: rng.random_range(-0.7..0.7),
                cy: rng.random_range(-0.7..0.7),
                sigma: rng.random_range(0.15..0.45),
                amp: rng.random_range(0.25..0.55),
            })
            .collect();
        Proto {
            base: rng.random_range(0.15..0.3),
            blobs,
            wave_fx: rng.random_range(0.5..3.0),
            wave_fy: rng.random_range(0.5..3.0),
            wave_phase: rng.random_range(0.0..std::f64::consts::TAU),
            wave_amp: rng.random_range(0.1..0.25),
        }
    }

    fn eval(&self, u: f64, v: f64) -> f64 {
        let mut value = self.base;
        for b in &self.blobs {
            let d2 = (u - b.cx).powi(2) + (v - b.cy).powi(2);
            value += b.amp * (-d2 / (2.0 * b.sigma * b.sigma)).exp();
        }
        value
            + self.wave_amp
                * (std::f64::consts::TAU * (self.wave_fx * u + self.wave_fy * v)
                    + self.wave_phase)
                    .sin()
    }
}

/// Mixing weights over base prototypes, one row per class. Look-alike
/// pairs replace both rows with `(1-s)·own + s·mean(a, b)`.
fn mixing_weights(config: &SynthConfig) -> Vec<Vec<f64>> {
    let c = config.num_classes;
    let mut weights: Vec<Vec<f64>> = (0..c)
        .map(|i| {
            let mut row = vec![0.0; c];
            row[i] = 1.0;
            row
        })
        .collect();
    for p in &config.lookalike_pairs {
        let shared: Vec<f64> = (0..c)
            .map(|k| 0.5 * (weights[p.a][k] + weights[p.b][k]))
            .collect();
        for &row in &[p.a, p.b] {
            for k in 0..c {
                weights[row][k] = (1.0 - p.similarity) * weights[row][k]
                    + p.similarity * shared[k];
            }
        }
    }
    weights
}

fn synth_class_set(config: &SynthConfig) -> ClassSet {
    let genera = ["Synthia", "Mimica", "Textura", "Granula"];
    let families = ["Blobaceae", "Waveaceae"];
    let mut genus: Vec<String> = (0..config.num_classes)
        .map(|c| genera[c % genera.len()].to_string())
        .collect();
    let mut family: Vec<String> = (0..config.num_classes)
        .map(|c| families[(c / 2) % families.len()].to_string())
        .collect();
    // Look-alike partners share lineage, mirroring congener confusion.
    for p in &config.lookalike_pairs {
        genus[p.b] = genus[p.a].clone();
        family[p.b] = family[p.a].clone();
    }
    let taxa: Vec<TaxonRecord> = (0..config.num_classes)
        .map(|c| TaxonRecord {
            class_id: c,
            scientific_name: format!("{} synthetica-{c:03}", genus[c]),
            common_name: format!("synthetic species {c}"),
            genus: genus[c].clone(),
            family: family[c].clone(),
            image_count: config.examples_per_class as u64,
        })
        .collect();
    ClassSet::new(
        format!("synth-{}x{}", config.num_classes, config.examples_per_class),
        taxa,
    )
    .expect("synthetic names are unique")
}

/// Generate the corpus. Deterministic under `config.seed`; each example
/// carries an `early`/`late` tag from its growth draw and a
/// `lookalike:<a>-<b>` tag when its class belongs to a pair.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Corpus, PipelineError> {
    config.validate()?;
    let protos: Vec<Proto> = (0..config.num_classes)
        .map(|c| Proto::sample(config.seed, c))
        .collect();
    let weights = mixing_weights(config);
    let class_set = synth_class_set(config);
    let s = config.image_size;
    let noise = Normal::new(0.0, 0.02).expect("valid normal");

    let mut examples = Vec::with_capacity(config.num_classes * config.examples_per_class);
    for class in 0..config.num_classes {
        for i in 0..config.examples_per_class {
            let index = (class * config.examples_per_class + i) as u64;
            let mut rng = rng_for(config.seed, "synth-inst", index);
            let growth: f64 = rng.random_range(0.0..1.0);
            let mag = config.intra_class_variation * growth;
            let theta = mag * rng.random_range(-0.7..0.7);
            let scale = 1.0 + mag * rng.random_range(-0.3..0.3);
            let (tx, ty) = (
                mag * rng.random_range(-0.25..0.25),
                mag * rng.random_range(-0.25..0.25),
            );
            let (sin_t, cos_t) = theta.sin_cos();

            let mut image = Array3::zeros((s, s, config.channels));
            for y in 0..s {
                for x in 0..s {
                    let u = 2.0 * (x as f64 + 0.5) / s as f64 - 1.0;
                    let v = 2.0 * (y as f64 + 0.5) / s as f64 - 1.0;
                    let uw = (cos_t * u - sin_t * v) / scale + tx;
                    let vw = (sin_t * u + cos_t * v) / scale + ty;
                    let mut value = 0.0;
                    for (k, w) in weights[class].iter().enumerate() {
                        if *w != 0.0 {
                            value += w * protos[k].eval(uw, vw);
                        }
                    }
                    for ch in 0..config.channels {
                        let jitter: f64 = noise.sample(&mut rng);
                        image[(y, x, ch)] =
                            (value + 0.05 * ch as f64 + jitter).clamp(0.0, 1.0);
                    }
                }
            }

            let mut tags = vec![if growth < 0.5 { "early" } else { "late" }.to_string()];
            for p in &config.lookalike_pairs {
                if class == p.a || class == p.b {
                    tags.push(format!("lookalike:{}-{}", p.a, p.b));
                }
            }
            examples.push(
                LabeledExample::new(
                    format!("synth-{}-c{class:03}-i{i:04}", config.seed),
                    image,
                    class,
                )
                .with_tags(tags),
            );
        }
    }
    let corpus = Corpus { class_set, examples };
    corpus.validate()?;
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_are_exact() {
        let config = SynthConfig {
            num_classes: 4,
            examples_per_class: 25,
            ..SynthConfig::default()
        };
        let config = SynthConfig {
            lookalike_pairs: vec![LookalikePair { a: 0, b: 1, similarity: 0.5 }],
            ..config
        };
        let corpus = generate_synthetic(&config).unwrap();
        assert_eq!(corpus.len(), 100);
        for c in 0..4 {
            assert_eq!(corpus.examples.iter().filter(|e| e.label == c).count(), 25);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let config = SynthConfig {
            num_classes: 3,
            examples_per_class: 4,
            lookalike_pairs: vec![],
            ..SynthConfig::default()
        };
        let a = generate_synthetic(&config).unwrap();
        let b = generate_synthetic(&config).unwrap();
        assert_eq!(a.examples.len(), b.examples.len());
        for (x, y) in a.examples.iter().zip(&b.examples) {
            assert_eq!(x.image, y.image);
            assert_eq!(x.strata_tags, y.strata_tags);
        }
        let c = generate_synthetic(&SynthConfig { seed: 1, ..config }).unwrap();
        assert_ne!(a.examples[0].image, c.examples[0].image);
    }

    #[test]
    fn growth_tags_cover_both_stages() {
        let corpus = generate_synthetic(&SynthConfig {
            num_classes: 2,
            examples_per_class: 30,
            lookalike_pairs: vec![],
            ..SynthConfig::default()
        })
        .unwrap();
        let early = corpus
            .examples
            .iter()
            .filter(|e| e.strata_tags.contains("early"))
            .count();
        assert!(early > 0 && early < corpus.len());
    }

    #[test]
    fn full_similarity_collapses_the_pair() {
        let config = SynthConfig {
            num_classes: 2,
            examples_per_class: 2,
            intra_class_variation: 0.0,
            lookalike_pairs: vec![LookalikePair { a: 0, b: 1, similarity: 1.0 }],
            ..SynthConfig::default()
        };
        let corpus = generate_synthetic(&config).unwrap();
        // With zero variation and full similarity, class fields agree;
        // images differ only by pixel noise.
        let a = &corpus.examples[0].image;
        let b = &corpus.examples[2].image;
        let max_diff = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff < 0.2, "max pixel difference {max_diff}");
        // Pair members share genus for attribution experiments.
        assert_eq!(corpus.class_set.taxa[0].genus, corpus.class_set.taxa[1].genus);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = SynthConfig {
            num_classes: 1,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SynthConfig {
            lookalike_pairs: vec![LookalikePair { a: 0, b: 99, similarity: 0.5 }],
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&bad).is_err());
    }
}
