//! Raster augmentation: flips, shift-crops, brightness/contrast jitter,
//! and the pairwise mixing ops (mixup, cutmix) that produce soft labels.

use crate::rng::rng_for;
use ndarray::Array3;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Augmentation controls; probabilities in [0, 1], strengths >= 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentPolicy {
    pub hflip_prob: f64,
    /// Zero-padding margin for random shift crops; 0 disables.
    pub crop_pad: usize,
    /// Max brightness shift and contrast deviation; 0 disables.
    pub brightness_contrast: f64,
    /// Beta(alpha, alpha) mixup; 0 disables.
    pub mixup_alpha: f64,
    /// Probability of cutmix per pair; 0 disables.
    pub cutmix_prob: f64,
}

impl AugmentPolicy {
    /// Geometric/photometric jitter only; no label mixing. This is the
    /// fine-tuning default since mixing hurts look-alike separation.
    pub fn finetune() -> Self {
        AugmentPolicy {
            hflip_prob: 0.5,
            crop_pad: 2,
            brightness_contrast: 0.1,
            mixup_alpha: 0.0,
            cutmix_prob: 0.0,
        }
    }

    /// Jitter plus mixup/cutmix, for supervised runs adjacent to
    /// pretraining where mixing helps.
    pub fn supervised_pretrain() -> Self {
        AugmentPolicy {
            mixup_alpha: 0.8,
            cutmix_prob: 0.25,
            ..AugmentPolicy::finetune()
        }
    }

    pub fn none() -> Self {
        AugmentPolicy {
            hflip_prob: 0.0,
            crop_pad: 0,
            brightness_contrast: 0.0,
            mixup_alpha: 0.0,
            cutmix_prob: 0.0,
        }
    }

    fn mixes(&self) -> bool {
        self.mixup_alpha > 0.0 || self.cutmix_prob > 0.0
    }
}

/// Augmented images with (possibly soft) label rows.
#[derive(Debug, Clone)]
pub struct AugmentedBatch {
    pub images: Vec<Array3<f64>>,
    /// One probability row per image; one-hot when no mixing applied.
    pub soft_labels: Vec<Vec<f64>>,
}

/// Deterministic per-example noise decisions, split out so individual
/// ops stay unit-testable.
pub struct AugmentNoise;

/// Horizontal flip (an involution).
pub fn hflip(image: &Array3<f64>) -> Array3<f64> {
    let (h, w, c) = image.dim();
    Array3::from_shape_fn((h, w, c), |(y, x, ch)| image[(y, w - 1 - x, ch)])
}

/// Shift-crop: zero-pad by `pad` and crop back at offset `(dy, dx)`,
/// offsets in `0..=2*pad`.
fn shift_crop(image: &Array3<f64>, pad: usize, dy: usize, dx: usize) -> Array3<f64> {
    let (h, w, c) = image.dim();
    Array3::from_shape_fn((h, w, c), |(y, x, ch)| {
        let sy = y as isize + dy as isize - pad as isize;
        let sx = x as isize + dx as isize - pad as isize;
        if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
            0.0
        } else {
            image[(sy as usize, sx as usize, ch)]
        }
    })
}

fn brightness_contrast(image: &Array3<f64>, gain: f64, shift: f64) -> Array3<f64> {
    image.mapv(|v| (gain * (v - 0.5) + 0.5 + shift).clamp(0.0, 1.0))
}

/// Convex combination of two images and their one-hot labels.
/// At `lambda = 1` the first image and label pass through unchanged.
pub fn mixup_pair(
    a: &Array3<f64>,
    b: &Array3<f64>,
    label_a: usize,
    label_b: usize,
    num_classes: usize,
    lambda: f64,
) -> (Array3<f64>, Vec<f64>) {
    let image = a * lambda + b * (1.0 - lambda);
    let mut soft = vec![0.0; num_classes];
    soft[label_a] += lambda;
    soft[label_b] += 1.0 - lambda;
    (image, soft)
}

/// Replace a rectangle of `a` with the same rectangle from `b`. The
/// rectangle targets area `1 - lambda`; the returned effective lambda
/// is recomputed from the pixels actually replaced (rounding quantizes
/// the box to whole pixels).
pub fn cutmix_pair(
    a: &Array3<f64>,
    b: &Array3<f64>,
    lambda: f64,
    rng: &mut ChaCha8Rng,
) -> (Array3<f64>, f64) {
    let (h, w, _c) = a.dim();
    let frac = (1.0 - lambda).max(0.0).sqrt();
    let bh = ((h as f64) * frac).round() as usize;
    let bw = ((w as f64) * frac).round() as usize;
    let mut out = a.clone();
    if bh == 0 || bw == 0 {
        return (out, 1.0);
    }
    let y0 = rng.random_range(0..=(h - bh));
    let x0 = rng.random_range(0..=(w - bw));
    for y in y0..y0 + bh {
        for x in x0..x0 + bw {
            for ch in 0..a.dim().2 {
                out[(y, x, ch)] = b[(y, x, ch)];
            }
        }
    }
    let replaced = (bh * bw) as f64 / (h * w) as f64;
    (out, 1.0 - replaced)
}

/// Apply the policy to a batch, deterministically under `seed`.
/// Mixing partners are drawn by a seeded permutation of the batch.
pub fn augment_batch(
    images: &[Array3<f64>],
    labels: &[usize],
    num_classes: usize,
    policy: &AugmentPolicy,
    seed: u64,
) -> AugmentedBatch {
    assert_eq!(images.len(), labels.len(), "images and labels must align");
    let mut rng = rng_for(seed, "augment", 0);
    let mut out: Vec<Array3<f64>> = Vec::with_capacity(images.len());
    for image in images {
        let mut img = image.clone();
        if policy.hflip_prob > 0.0 && rng.random_range(0.0..1.0) < policy.hflip_prob {
            img = hflip(&img);
        }
        if policy.crop_pad > 0 {
            let dy = rng.random_range(0..=2 * policy.crop_pad);
            let dx = rng.random_range(0..=2 * policy.crop_pad);
            img = shift_crop(&img, policy.crop_pad, dy, dx);
        }
        if policy.brightness_contrast > 0.0 {
            let s = policy.brightness_contrast;
            let gain = 1.0 + rng.random_range(-s..s);
            let shift = rng.random_range(-s..s);
            img = brightness_contrast(&img, gain, shift);
        }
        out.push(img);
    }

    let mut soft_labels: Vec<Vec<f64>> = labels
        .iter()
        .map(|&y| {
            let mut row = vec![0.0; num_classes];
            row[y] = 1.0;
            row
        })
        .collect();

    if policy.mixes() && images.len() > 1 {
        let mut partners: Vec<usize> = (0..images.len()).collect();
        partners.shuffle(&mut rng);
        let base = out.clone();
        for i in 0..out.len() {
            let j = partners[i];
            if j == i {
                continue;
            }
            let use_cutmix =
                policy.cutmix_prob > 0.0 && rng.random_range(0.0..1.0) < policy.cutmix_prob;
            if use_cutmix {
                let lambda = sample_beta(policy.mixup_alpha.max(1.0), &mut rng);
                let (img, eff_lambda) = cutmix_pair(&base[i], &base[j], lambda, &mut rng);
                out[i] = img;
                let mut soft = vec![0.0; num_classes];
                soft[labels[i]] += eff_lambda;
                soft[labels[j]] += 1.0 - eff_lambda;
                soft_labels[i] = soft;
            } else if policy.mixup_alpha > 0.0 {
                let lambda = sample_beta(policy.mixup_alpha, &mut rng);
                let (img, soft) =
                    mixup_pair(&base[i], &base[j], labels[i], labels[j], num_classes, lambda);
                out[i] = img;
                soft_labels[i] = soft;
            }
        }
    }

    AugmentedBatch {
        images: out,
        soft_labels,
    }
}

fn sample_beta(alpha: f64, rng: &mut ChaCha8Rng) -> f64 {
    use rand_distr::{Beta, Distribution};
    Beta::new(alpha, alpha)
        .map(|d| d.sample(rng))
        .unwrap_or(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn gradient_image() -> Array3<f64> {
        Array3::from_shape_fn((8, 8, 1), |(y, x, _)| (y * 8 + x) as f64 / 64.0)
    }

    #[test]
    fn hflip_is_an_involution() {
        let img = gradient_image();
        assert_eq!(hflip(&hflip(&img)), img);
        assert_ne!(hflip(&img), img);
    }

    #[test]
    fn mixup_at_lambda_one_is_identity() {
        let a = gradient_image();
        let b = hflip(&a);
        let (img, soft) = mixup_pair(&a, &b, 2, 5, 8, 1.0);
        assert_eq!(img, a);
        let mut expected = vec![0.0; 8];
        expected[2] = 1.0;
        assert_eq!(soft, expected);
    }

    #[test]
    fn cutmix_replaced_fraction_matches_lambda() {
        let a = Array3::zeros((32, 32, 1));
        let b = Array3::ones((32, 32, 1));
        let mut rng = rng_for(3, "cutmix-test", 0);
        for &lambda in &[0.2, 0.5, 0.75, 0.9] {
            let (img, eff) = cutmix_pair(&a, &b, lambda, &mut rng);
            let replaced = img.iter().filter(|&&v| v == 1.0).count() as f64 / 1024.0;
            assert!((replaced - (1.0 - eff)).abs() < 1e-12);
            // Quantization slack: one patch row of pixels at 32px.
            assert!(
                (replaced - (1.0 - lambda)).abs() <= 32.0 / 1024.0 + 0.06,
                "lambda {lambda}, replaced {replaced}"
            );
        }
    }

    #[test]
    fn batches_are_deterministic_under_seed() {
        let images = vec![gradient_image(), hflip(&gradient_image())];
        let labels = vec![0, 1];
        let policy = AugmentPolicy::supervised_pretrain();
        let a = augment_batch(&images, &labels, 2, &policy, 42);
        let b = augment_batch(&images, &labels, 2, &policy, 42);
        assert_eq!(a.images, b.images);
        assert_eq!(a.soft_labels, b.soft_labels);
        // Soft labels stay convex combinations.
        for row in &a.soft_labels {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn no_policy_means_one_hot_passthrough() {
        let images = vec![gradient_image()];
        let out = augment_batch(&images, &[0], 3, &AugmentPolicy::none(), 7);
        assert_eq!(out.images[0], images[0]);
        assert_eq!(out.soft_labels[0], vec![1.0, 0.0, 0.0]);
    }
}
