//! Forward passes for the encoder, classifier, and masked autoencoder.
//!
//! Every forward pass records a [`Tape`]; [`backprop`] consumes the
//! returned cache and yields exact gradients for all parameters that
//! participated in the loss.

use super::arch::ArchConfig;
use super::checkpoint::{GradientSet, ModelCheckpoint};
use super::NnError;
use crate::autodiff::{Tape, VarId};
use crate::rng::rng_for;
use ndarray::{Array2, Array3};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Which objective a training forward pass attached to the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mae,
    CrossEntropy,
    MixupCrossEntropy,
}

/// Classification targets: hard labels or mixed soft rows.
#[derive(Debug, Clone)]
pub enum SoftTargets {
    Hard(Vec<usize>),
    Soft(Vec<Vec<f64>>),
}

impl SoftTargets {
    pub fn len(&self) -> usize {
        match self {
            SoftTargets::Hard(v) => v.len(),
            SoftTargets::Soft(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn row(&self, i: usize, classes: usize) -> Result<Array2<f64>, NnError> {
        match self {
            SoftTargets::Hard(labels) => {
                let y = labels[i];
                if y >= classes {
                    return Err(NnError::ClassCountMismatch {
                        ckpt: classes,
                        task: y + 1,
                    });
                }
                let mut row = Array2::zeros((1, classes));
                row[(0, y)] = 1.0;
                Ok(row)
            }
            SoftTargets::Soft(rows) => {
                if rows[i].len() != classes {
                    return Err(NnError::ClassCountMismatch {
                        ckpt: classes,
                        task: rows[i].len(),
                    });
                }
                Ok(Array2::from_shape_vec((1, classes), rows[i].clone()).unwrap())
            }
        }
    }

    fn kind(&self) -> LossKind {
        match self {
            SoftTargets::Hard(_) => LossKind::CrossEntropy,
            SoftTargets::Soft(_) => LossKind::MixupCrossEntropy,
        }
    }
}

/// Embedding pooling for downstream probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pooling {
    #[default]
    ClassToken,
    MeanPatch,
}

/// Tape plus bookkeeping retained for [`backprop`].
pub struct ForwardCache {
    tape: Tape,
    loss: Option<(VarId, LossKind)>,
    param_vars: BTreeMap<String, VarId>,
    pub loss_value: Option<f64>,
}

impl ForwardCache {
    pub fn loss_kind(&self) -> Option<LossKind> {
        self.loss.map(|(_, k)| k)
    }
}

/// Inference outputs plus the cache that produced them.
pub struct ForwardOutput {
    /// Class-token embedding per image, after the final layer norm.
    pub embeddings: Array2<f64>,
    /// Present when the checkpoint carries a classifier head.
    pub logits: Option<Array2<f64>>,
    /// `attention[image][block][head]` row-stochastic matrices.
    pub attention: Vec<Vec<Vec<Array2<f64>>>>,
    pub cache: ForwardCache,
}

/// Masked-autoencoder loss outputs.
pub struct MaeOutput {
    pub loss: f64,
    /// `mask[image][patch]`: true when the patch was hidden.
    pub mask: Vec<Vec<bool>>,
    /// Decoder reconstruction for every patch, per image.
    pub reconstruction: Vec<Array2<f64>>,
    pub cache: ForwardCache,
}

/// Flatten an image into row-major patch vectors.
pub fn patchify(image: &Array3<f64>, patch: usize) -> Array2<f64> {
    let (h, w, c) = image.dim();
    let (gh, gw) = (h / patch, w / patch);
    let mut out = Array2::zeros((gh * gw, patch * patch * c));
    for gy in 0..gh {
        for gx in 0..gw {
            let row = gy * gw + gx;
            let mut k = 0;
            for py in 0..patch {
                for px in 0..patch {
                    for ch in 0..c {
                        out[(row, k)] = image[(gy * patch + py, gx * patch + px, ch)];
                        k += 1;
                    }
                }
            }
        }
    }
    out
}

fn check_batch(arch: &ArchConfig, images: &[Array3<f64>]) -> Result<(), NnError> {
    if images.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    for (i, img) in images.iter().enumerate() {
        let dim = img.dim();
        let want = (arch.image_size, arch.image_size, arch.channels);
        if dim != want {
            return Err(NnError::ShapeMismatch(format!(
                "image {i} has dimensions {dim:?}, architecture expects {want:?}"
            )));
        }
    }
    Ok(())
}

/// Graph assembly over one checkpoint's parameters.
struct Builder<'a> {
    tape: Tape,
    vars: BTreeMap<String, VarId>,
    ckpt: &'a ModelCheckpoint,
}

impl<'a> Builder<'a> {
    fn new(ckpt: &'a ModelCheckpoint) -> Self {
        let mut tape = Tape::new();
        let mut vars = BTreeMap::new();
        for (name, value) in &ckpt.params {
            vars.insert(name.clone(), tape.leaf(value.clone()));
        }
        Builder { tape, vars, ckpt }
    }

    fn var(&self, name: &str) -> VarId {
        self.vars[name]
    }

    fn linear(&mut self, x: VarId, prefix: &str) -> Result<VarId, NnError> {
        let m = self.tape.matmul(x, self.var(&format!("{prefix}.weight")))?;
        Ok(self
            .tape
            .add_row_broadcast(m, self.var(&format!("{prefix}.bias")))?)
    }

    fn layer_norm(&mut self, x: VarId, prefix: &str) -> Result<VarId, NnError> {
        Ok(self.tape.layer_norm_rows(
            x,
            self.var(&format!("{prefix}.gamma")),
            self.var(&format!("{prefix}.beta")),
            1e-6,
        )?)
    }

    fn attention(
        &mut self,
        x: VarId,
        prefix: &str,
        dim: usize,
        heads: usize,
        sink: &mut Vec<Array2<f64>>,
    ) -> Result<VarId, NnError> {
        let head_dim = dim / heads;
        let qkv = self.linear(x, &format!("{prefix}attn.qkv"))?;
        let mut outs = Vec::with_capacity(heads);
        for h in 0..heads {
            let q = self.tape.slice_cols(qkv, h * head_dim, head_dim);
            let k = self.tape.slice_cols(qkv, dim + h * head_dim, head_dim);
            let v = self.tape.slice_cols(qkv, 2 * dim + h * head_dim, head_dim);
            let kt = self.tape.transpose(k);
            let scores = self.tape.matmul(q, kt)?;
            let scaled = self.tape.scale(scores, 1.0 / (head_dim as f64).sqrt());
            let attn = self.tape.softmax_rows(scaled);
            sink.push(self.tape.value(attn).clone());
            outs.push(self.tape.matmul(attn, v)?);
        }
        let cat = self.tape.concat_cols(&outs)?;
        self.linear(cat, &format!("{prefix}attn.proj"))
    }

    /// Pre-norm transformer block. `coeffs` scale the two residual
    /// branches: 1 in evaluation, 0 or 1/(1-p) under stochastic depth.
    fn block(
        &mut self,
        x: VarId,
        prefix: &str,
        dim: usize,
        heads: usize,
        coeffs: (f64, f64),
        sink: &mut Vec<Array2<f64>>,
    ) -> Result<VarId, NnError> {
        let mut x = x;
        if coeffs.0 != 0.0 {
            let n1 = self.layer_norm(x, &format!("{prefix}norm1"))?;
            let mut branch = self.attention(n1, prefix, dim, heads, sink)?;
            if coeffs.0 != 1.0 {
                branch = self.tape.scale(branch, coeffs.0);
            }
            x = self.tape.add(x, branch)?;
        }
        if coeffs.1 != 0.0 {
            let n2 = self.layer_norm(x, &format!("{prefix}norm2"))?;
            let h = self.linear(n2, &format!("{prefix}mlp.fc1"))?;
            let act = self.tape.gelu(h);
            let mut branch = self.linear(act, &format!("{prefix}mlp.fc2"))?;
            if coeffs.1 != 1.0 {
                branch = self.tape.scale(branch, coeffs.1);
            }
            x = self.tape.add(x, branch)?;
        }
        Ok(x)
    }

    /// Embed `patches`, prepend the class token, add positional rows,
    /// and run the encoder stack. `positions` lists pos-embedding rows
    /// (0 for the class token, 1+patch_index for each kept patch).
    fn encode(
        &mut self,
        patches: Array2<f64>,
        positions: &[usize],
        coeffs: &[(f64, f64)],
        sink: &mut Vec<Array2<f64>>,
    ) -> Result<VarId, NnError> {
        let arch = &self.ckpt.arch;
        let p = self.tape.constant(patches);
        let embedded = self.linear(p, "patch_embed")?;
        let cls = self.var("cls_token");
        let tokens = self.tape.concat_rows(&[cls, embedded])?;
        let pos = self.tape.gather_rows(self.var("pos_embed"), positions)?;
        let mut x = self.tape.add(tokens, pos)?;
        for b in 0..arch.depth {
            x = self.block(
                x,
                &format!("blocks.{b}."),
                arch.embed_dim,
                arch.heads,
                coeffs[b],
                sink,
            )?;
        }
        self.layer_norm(x, "norm")
    }

    fn finish(self, loss: Option<(VarId, LossKind)>) -> ForwardCache {
        let loss_value = loss.map(|(v, _)| self.tape.value(v)[(0, 0)]);
        ForwardCache {
            tape: self.tape,
            loss,
            param_vars: self.vars,
            loss_value,
        }
    }
}

fn eval_coeffs(depth: usize) -> Vec<(f64, f64)> {
    vec![(1.0, 1.0); depth]
}

/// Stochastic-depth branch coefficients for one image.
fn train_coeffs(depth: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    (0..depth)
        .map(|_| {
            let keep = |rng: &mut ChaCha8Rng| {
                if rate > 0.0 && rng.random_range(0.0..1.0) < rate {
                    0.0
                } else if rate > 0.0 {
                    1.0 / (1.0 - rate)
                } else {
                    1.0
                }
            };
            (keep(rng), keep(rng))
        })
        .collect()
}

/// Inference pass: class-token embeddings, logits when a head is
/// present, and per-head attention maps.
pub fn forward_vit(
    ckpt: &ModelCheckpoint,
    images: &[Array3<f64>],
) -> Result<ForwardOutput, NnError> {
    check_batch(&ckpt.arch, images)?;
    let arch = &ckpt.arch;
    let positions: Vec<usize> = (0..arch.seq_len()).collect();
    let mut builder = Builder::new(ckpt);
    let mut embeddings = Array2::zeros((images.len(), arch.embed_dim));
    let mut logits = ckpt
        .has_head()
        .then(|| Array2::zeros((images.len(), arch.num_classes)));
    let mut attention = Vec::with_capacity(images.len());
    let heads = arch.heads;
    for (i, image) in images.iter().enumerate() {
        let mut sink = Vec::new();
        let encoded = builder.encode(
            patchify(image, arch.patch_size),
            &positions,
            &eval_coeffs(arch.depth),
            &mut sink,
        )?;
        let cls = builder.tape.gather_rows(encoded, &[0])?;
        embeddings
            .row_mut(i)
            .assign(&builder.tape.value(cls).row(0));
        if let Some(ref mut l) = logits {
            let out = builder.linear(cls, "head")?;
            l.row_mut(i).assign(&builder.tape.value(out).row(0));
        }
        attention.push(
            sink.chunks(heads)
                .map(|c| c.to_vec())
                .collect::<Vec<Vec<Array2<f64>>>>(),
        );
    }
    Ok(ForwardOutput {
        embeddings,
        logits,
        attention,
        cache: builder.finish(None),
    })
}

/// Pooled embeddings for probes: class token or mean over patch tokens.
pub fn embed_batch(
    ckpt: &ModelCheckpoint,
    images: &[Array3<f64>],
    pooling: Pooling,
) -> Result<Array2<f64>, NnError> {
    check_batch(&ckpt.arch, images)?;
    let arch = &ckpt.arch;
    let positions: Vec<usize> = (0..arch.seq_len()).collect();
    let mut builder = Builder::new(ckpt);
    let mut out = Array2::zeros((images.len(), arch.embed_dim));
    for (i, image) in images.iter().enumerate() {
        let mut sink = Vec::new();
        let encoded = builder.encode(
            patchify(image, arch.patch_size),
            &positions,
            &eval_coeffs(arch.depth),
            &mut sink,
        )?;
        let pooled = match pooling {
            Pooling::ClassToken => builder.tape.gather_rows(encoded, &[0])?,
            Pooling::MeanPatch => {
                let rows: Vec<usize> = (1..arch.seq_len()).collect();
                let patches = builder.tape.gather_rows(encoded, &rows)?;
                builder.tape.mean_rows(patches)
            }
        };
        out.row_mut(i).assign(&builder.tape.value(pooled).row(0));
    }
    Ok(out)
}

/// Supervised forward pass with a cross-entropy loss on the tape.
///
/// `drop_path_rng` enables stochastic depth; pass `None` for
/// deterministic passes (evaluation-style loss or gradient checks).
pub fn forward_classifier_loss(
    ckpt: &ModelCheckpoint,
    images: &[Array3<f64>],
    targets: &SoftTargets,
    drop_path_rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardCache, NnError> {
    check_batch(&ckpt.arch, images)?;
    if !ckpt.has_head() {
        return Err(NnError::Format(
            "checkpoint has no classifier head".to_string(),
        ));
    }
    if targets.len() != images.len() {
        return Err(NnError::ShapeMismatch(format!(
            "{} images but {} targets",
            images.len(),
            targets.len()
        )));
    }
    let arch = ckpt.arch.clone();
    let positions: Vec<usize> = (0..arch.seq_len()).collect();
    let mut builder = Builder::new(ckpt);
    let mut losses = Vec::with_capacity(images.len());
    let mut rng = drop_path_rng;
    for (i, image) in images.iter().enumerate() {
        let coeffs = match rng.as_deref_mut() {
            Some(r) => train_coeffs(arch.depth, arch.drop_path_rate, r),
            None => eval_coeffs(arch.depth),
        };
        let mut sink = Vec::new();
        let encoded = builder.encode(patchify(image, arch.patch_size), &positions, &coeffs, &mut sink)?;
        let cls = builder.tape.gather_rows(encoded, &[0])?;
        let logits = builder.linear(cls, "head")?;
        let target = targets.row(i, arch.num_classes)?;
        losses.push(builder.tape.cross_entropy_logits(logits, &target)?);
    }
    let total = builder.tape.add_many(&losses)?;
    let loss = builder.tape.scale(total, 1.0 / images.len() as f64);
    Ok(builder.finish(Some((loss, targets.kind()))))
}

/// Mean squared error over the masked rows only.
pub fn masked_mse(pred: &Array2<f64>, target: &Array2<f64>, mask: &[bool]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, &masked) in mask.iter().enumerate() {
        if !masked {
            continue;
        }
        for j in 0..pred.ncols() {
            let d = pred[(i, j)] - target[(i, j)];
            sum += d * d;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Masked-autoencoder forward pass: hide `round(mask_ratio * P)` patches
/// per image, reconstruct, and score MSE on the hidden patches only.
pub fn mae_forward_loss(
    ckpt: &ModelCheckpoint,
    images: &[Array3<f64>],
    mask_seed: u64,
) -> Result<MaeOutput, NnError> {
    check_batch(&ckpt.arch, images)?;
    if !ckpt.has_decoder() {
        return Err(NnError::Format(
            "checkpoint has no decoder; cannot compute reconstruction loss".to_string(),
        ));
    }
    let arch = ckpt.arch.clone();
    let n = arch.num_patches();
    let m = arch.masked_patch_count();
    let mut builder = Builder::new(ckpt);
    let mut losses = Vec::with_capacity(images.len());
    let mut masks = Vec::with_capacity(images.len());
    let mut reconstructions = Vec::with_capacity(images.len());

    for (i, image) in images.iter().enumerate() {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng_for(mask_seed, "mae-mask", i as u64));
        let mut mask = vec![false; n];
        for &p in order.iter().take(m) {
            mask[p] = true;
        }
        let visible: Vec<usize> = (0..n).filter(|&p| !mask[p]).collect();
        let masked: Vec<usize> = (0..n).filter(|&p| mask[p]).collect();

        let patches = patchify(image, arch.patch_size);
        let mut visible_patches = Array2::zeros((visible.len(), arch.patch_dim()));
        for (r, &p) in visible.iter().enumerate() {
            visible_patches.row_mut(r).assign(&patches.row(p));
        }
        let mut target = Array2::zeros((masked.len(), arch.patch_dim()));
        for (r, &p) in masked.iter().enumerate() {
            target.row_mut(r).assign(&patches.row(p));
        }

        let mut positions = vec![0usize];
        positions.extend(visible.iter().map(|&p| p + 1));
        let mut sink = Vec::new();
        let encoded = builder.encode(
            visible_patches,
            &positions,
            &eval_coeffs(arch.depth),
            &mut sink,
        )?;

        // Project into the decoder width, re-insert mask tokens at their
        // original positions, and add decoder positional rows.
        let dec_tokens = builder.linear(encoded, "decoder.embed")?;
        let mask_token = builder.var("decoder.mask_token");
        let mut sources = vec![(dec_tokens, 0usize)];
        let mut visible_rank = BTreeMap::new();
        for (r, &p) in visible.iter().enumerate() {
            visible_rank.insert(p, r);
        }
        for p in 0..n {
            match visible_rank.get(&p) {
                Some(&r) => sources.push((dec_tokens, r + 1)),
                None => sources.push((mask_token, 0)),
            }
        }
        let assembled = builder.tape.select_rows(&sources)?;
        let mut x = builder
            .tape
            .add(assembled, builder.var("decoder.pos_embed"))?;
        for b in 0..arch.decoder_depth {
            x = builder.block(
                x,
                &format!("decoder.blocks.{b}."),
                arch.decoder_dim,
                arch.heads,
                (1.0, 1.0),
                &mut sink,
            )?;
        }
        let normed = builder.layer_norm(x, "decoder.norm")?;
        let pred = builder.linear(normed, "decoder.pred")?;

        let patch_rows: Vec<usize> = (1..=n).collect();
        let pred_patches = builder.tape.gather_rows(pred, &patch_rows)?;
        reconstructions.push(builder.tape.value(pred_patches).clone());

        let masked_rows: Vec<usize> = masked.iter().map(|&p| p + 1).collect();
        let pred_masked = builder.tape.gather_rows(pred, &masked_rows)?;
        let target_var = builder.tape.constant(target);
        let diff = builder.tape.sub(pred_masked, target_var)?;
        let sq = builder.tape.hadamard(diff, diff)?;
        losses.push(builder.tape.mean_all(sq));
        masks.push(mask);
    }

    let total = builder.tape.add_many(&losses)?;
    let loss_var = builder.tape.scale(total, 1.0 / images.len() as f64);
    let loss = builder.tape.value(loss_var)[(0, 0)];
    Ok(MaeOutput {
        loss,
        mask: masks,
        reconstruction: reconstructions,
        cache: builder.finish(Some((loss_var, LossKind::Mae))),
    })
}

/// Run reverse-mode accumulation from the cache's loss node.
///
/// Returns the gradient for every parameter that participated in the
/// loss, plus the loss value. Fails with [`NnError::StaleCache`] when the
/// cache was built without a loss (pure inference).
pub fn backprop(cache: ForwardCache) -> Result<(GradientSet, f64), NnError> {
    let ForwardCache {
        mut tape,
        loss,
        param_vars,
        loss_value,
    } = cache;
    let Some((loss_var, _)) = loss else {
        return Err(NnError::StaleCache);
    };
    let grads = tape.backward(loss_var)?;
    let mut set = GradientSet::default();
    for (name, var) in &param_vars {
        if let Some(g) = grads.get(*var) {
            set.grads.insert(name.clone(), g.clone());
        }
    }
    set.assert_finite()?;
    Ok((set, loss_value.expect("loss value recorded with loss node")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::arch::ArchConfig;
    use crate::nn::checkpoint::ModelCheckpoint;
    use ndarray::Array3;
    use rand_chacha::rand_core::SeedableRng;

    fn tiny_arch() -> ArchConfig {
        ArchConfig {
            image_size: 8,
            patch_size: 4,
            channels: 1,
            embed_dim: 8,
            depth: 2,
            heads: 2,
            mlp_ratio: 2.0,
            decoder_dim: 4,
            decoder_depth: 1,
            mask_ratio: 0.5,
            num_classes: 3,
            drop_path_rate: 0.1,
        }
    }

    fn random_image(arch: &ArchConfig, seed: u64) -> Array3<f64> {
        let mut rng = rng_for(seed, "img", 0);
        Array3::from_shape_fn(
            (arch.image_size, arch.image_size, arch.channels),
            |_| rng.random_range(0.0..1.0),
        )
    }

    #[test]
    fn forward_shapes_and_attention_rows() {
        let arch = ArchConfig::default().with_classes(5);
        let ckpt = ModelCheckpoint::init(arch.clone(), 3).unwrap();
        let images = vec![random_image(&arch, 1), random_image(&arch, 2)];
        let out = forward_vit(&ckpt, &images).unwrap();
        assert_eq!(out.embeddings.dim(), (2, 64));
        assert_eq!(out.logits.as_ref().unwrap().dim(), (2, 5));
        // 64 patch tokens + class token.
        assert_eq!(out.attention[0][0][0].dim(), (65, 65));
        for img in &out.attention {
            for block in img {
                for head in block {
                    for row in head.rows() {
                        assert!((row.sum() - 1.0).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn wrong_image_dims_rejected() {
        let arch = tiny_arch();
        let ckpt = ModelCheckpoint::init(arch, 3).unwrap();
        let bad = Array3::zeros((4, 4, 1));
        assert!(matches!(
            forward_vit(&ckpt, &[bad]),
            Err(NnError::ShapeMismatch(_))
        ));
        assert!(matches!(forward_vit(&ckpt, &[]), Err(NnError::EmptyBatch)));
    }

    #[test]
    fn zeroed_positions_make_class_token_permutation_invariant() {
        let arch = tiny_arch();
        let mut ckpt = ModelCheckpoint::init(arch.clone(), 5).unwrap();
        ckpt.params.insert(
            "pos_embed".to_string(),
            Array2::zeros((arch.seq_len(), arch.embed_dim)),
        );
        let image = random_image(&arch, 9);
        // Swap two patch blocks spatially: patches (0,0) and (1,1).
        let mut permuted = image.clone();
        for py in 0..4 {
            for px in 0..4 {
                let a = image[(py, px, 0)];
                let b = image[(4 + py, 4 + px, 0)];
                permuted[(py, px, 0)] = b;
                permuted[(4 + py, 4 + px, 0)] = a;
            }
        }
        let e1 = forward_vit(&ckpt, &[image]).unwrap().embeddings;
        let e2 = forward_vit(&ckpt, &[permuted]).unwrap().embeddings;
        for j in 0..arch.embed_dim {
            assert!((e1[(0, j)] - e2[(0, j)]).abs() < 1e-9);
        }
    }

    #[test]
    fn mae_masks_exactly_the_rounded_count() {
        let arch = tiny_arch(); // 4 patches, ratio 0.5 -> 2 masked
        let ckpt = ModelCheckpoint::init(arch.clone(), 2).unwrap();
        let out = mae_forward_loss(&ckpt, &[random_image(&arch, 3)], 11).unwrap();
        assert_eq!(out.mask[0].iter().filter(|&&m| m).count(), 2);
        // Different mask seed, different mask with overwhelming probability.
        let out2 = mae_forward_loss(&ckpt, &[random_image(&arch, 3)], 12).unwrap();
        let _ = out2;
    }

    #[test]
    fn mae_loss_matches_direct_masked_mse() {
        let arch = ArchConfig::default().with_classes(3);
        let ckpt = ModelCheckpoint::init(arch.clone(), 4).unwrap();
        let image = random_image(&arch, 6);
        let out = mae_forward_loss(&ckpt, &[image.clone()], 21).unwrap();
        let target = patchify(&image, arch.patch_size);
        let oracle = masked_mse(&out.reconstruction[0], &target, &out.mask[0]);
        assert!((out.loss - oracle).abs() < 1e-9);
    }

    #[test]
    fn masked_mse_ignores_visible_rows_and_zero_on_identity() {
        let pred = Array2::from_shape_fn((4, 3), |(i, j)| (i * 3 + j) as f64);
        let mut target = pred.clone();
        let mask = vec![true, false, true, false];
        // Identity on masked rows -> zero loss.
        assert_eq!(masked_mse(&pred, &target, &mask), 0.0);
        // Perturb only visible rows -> still zero.
        target[(1, 0)] += 100.0;
        target[(3, 2)] -= 5.0;
        assert_eq!(masked_mse(&pred, &target, &mask), 0.0);
        // Perturb a masked row -> positive.
        target[(0, 0)] += 1.0;
        assert!(masked_mse(&pred, &target, &mask) > 0.0);
    }

    #[test]
    fn backprop_without_loss_is_stale() {
        let arch = tiny_arch();
        let ckpt = ModelCheckpoint::init(arch.clone(), 2).unwrap();
        let out = forward_vit(&ckpt, &[random_image(&arch, 1)]).unwrap();
        assert!(matches!(backprop(out.cache), Err(NnError::StaleCache)));
    }

    #[test]
    fn classifier_loss_decreases_toward_target_logit() {
        let arch = tiny_arch();
        let ckpt = ModelCheckpoint::init(arch.clone(), 8).unwrap();
        let images = vec![random_image(&arch, 1), random_image(&arch, 2)];
        let targets = SoftTargets::Hard(vec![0, 2]);
        let cache = forward_classifier_loss(&ckpt, &images, &targets, None).unwrap();
        assert_eq!(cache.loss_kind(), Some(LossKind::CrossEntropy));
        let (grads, loss) = backprop(cache).unwrap();
        assert!(loss > 0.0);
        assert!(grads.get("head.weight").is_some());
        assert!(grads.get("patch_embed.weight").is_some());
        // Decoder does not participate in the supervised loss.
        assert!(grads.get("decoder.pred.weight").is_none());
    }

    #[test]
    fn drop_path_is_seeded_and_only_in_training() {
        let mut arch = tiny_arch();
        arch.drop_path_rate = 0.9;
        let ckpt = ModelCheckpoint::init(arch.clone(), 8).unwrap();
        let images = vec![random_image(&arch, 1)];
        let targets = SoftTargets::Hard(vec![1]);
        let loss_at = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            forward_classifier_loss(&ckpt, &images, &targets, Some(&mut rng))
                .unwrap()
                .loss_value
                .unwrap()
        };
        assert_eq!(loss_at(4), loss_at(4));
        let eval_loss = forward_classifier_loss(&ckpt, &images, &targets, None)
            .unwrap()
            .loss_value
            .unwrap();
        let eval_loss2 = forward_classifier_loss(&ckpt, &images, &targets, None)
            .unwrap()
            .loss_value
            .unwrap();
        assert_eq!(eval_loss, eval_loss2);
    }
}
