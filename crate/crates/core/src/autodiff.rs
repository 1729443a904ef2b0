//! Minimal reverse-mode automatic differentiation over f64 matrices.
//!
//! A [`Tape`] records each operation with a one-shot backward closure.
//! Values are `ndarray::Array2<f64>`; vectors are 1xN rows and scalars
//! are 1x1. Batches are expressed as independent subgraphs that share
//! parameter leaves, so gradient accumulation across a batch falls out
//! of ordinary reverse traversal with a fixed, deterministic order.

use ndarray::{s, Array2, Axis};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AutodiffError {
    #[error("backward root must be a 1x1 scalar, got {0}x{1}")]
    NonScalarRoot(usize, usize),
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarId(pub(crate) usize);

type BackwardFn = Box<dyn FnOnce(&Array2<f64>) -> Vec<(usize, Array2<f64>)>>;

struct Node {
    value: Array2<f64>,
    backward: Option<BackwardFn>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`VarId`].
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: VarId) -> Option<&Array2<f64>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: VarId) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Array2<f64>, backward: Option<BackwardFn>) -> VarId {
        self.nodes.push(Node { value, backward });
        VarId(self.nodes.len() - 1)
    }

    /// A node that receives no gradient of its own (inputs, targets).
    pub fn constant(&mut self, value: Array2<f64>) -> VarId {
        self.push(value, None)
    }

    /// A trainable leaf; gradients accumulate here during backward.
    pub fn leaf(&mut self, value: Array2<f64>) -> VarId {
        self.push(value, None)
    }

    pub fn matmul(&mut self, a: VarId, b: VarId) -> Result<VarId, AutodiffError> {
        let av = self.nodes[a.0].value.clone();
        let bv = self.nodes[b.0].value.clone();
        if av.ncols() != bv.nrows() {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                lhs: av.dim(),
                rhs: bv.dim(),
            });
        }
        let out = av.dot(&bv);
        Ok(self.push(
            out,
            Some(Box::new(move |g| {
                vec![(a.0, g.dot(&bv.t())), (b.0, av.t().dot(g))]
            })),
        ))
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> Result<VarId, AutodiffError> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if av.dim() != bv.dim() {
            return Err(AutodiffError::ShapeMismatch {
                op: "add",
                lhs: av.dim(),
                rhs: bv.dim(),
            });
        }
        let out = av + bv;
        Ok(self.push(
            out,
            Some(Box::new(move |g| vec![(a.0, g.clone()), (b.0, g.clone())])),
        ))
    }

    /// Sum of equally shaped terms (batch loss reduction).
    pub fn add_many(&mut self, terms: &[VarId]) -> Result<VarId, AutodiffError> {
        assert!(!terms.is_empty(), "add_many needs at least one term");
        let dim = self.nodes[terms[0].0].value.dim();
        let mut out = Array2::zeros(dim);
        for t in terms {
            let v = &self.nodes[t.0].value;
            if v.dim() != dim {
                return Err(AutodiffError::ShapeMismatch {
                    op: "add_many",
                    lhs: dim,
                    rhs: v.dim(),
                });
            }
            out += v;
        }
        let parents: Vec<usize> = terms.iter().map(|t| t.0).collect();
        Ok(self.push(
            out,
            Some(Box::new(move |g| {
                parents.iter().map(|&p| (p, g.clone())).collect()
            })),
        ))
    }

    pub fn sub(&mut self, a: VarId, b: VarId) -> Result<VarId, AutodiffError> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if av.dim() != bv.dim() {
            return Err(AutodiffError::ShapeMismatch {
                op: "sub",
                lhs: av.dim(),
                rhs: bv.dim(),
            });
        }
        let out = av - bv;
        Ok(self.push(
            out,
            Some(Box::new(move |g| vec![(a.0, g.clone()), (b.0, -g)])),
        ))
    }

    pub fn hadamard(&mut self, a: VarId, b: VarId) -> Result<VarId, AutodiffError> {
        let av = self.nodes[a.0].value.clone();
        let bv = self.nodes[b.0].value.clone();
        if av.dim() != bv.dim() {
            return Err(AutodiffError::ShapeMismatch {
                op: "hadamard",
                lhs: av.dim(),
                rhs: bv.dim(),
            });
        }
        let out = &av * &bv;
        Ok(self.push(
            out,
            Some(Box::new(move |g| vec![(a.0, g * &bv), (b.0, g * &av)])),
        ))
    }

    pub fn scale(&mut self, a: VarId, c: f64) -> VarId {
        let out = &self.nodes[a.0].value * c;
        self.push(out, Some(Box::new(move |g| vec![(a.0, g * c)])))
    }

    pub fn transpose(&mut self, a: VarId) -> VarId {
        let out = self.nodes[a.0].value.t().to_owned();
        self.push(out, Some(Box::new(move |g| vec![(a.0, g.t().to_owned())])))
    }

    /// `x + row` with `row` broadcast over every row of `x`.
    pub fn add_row_broadcast(&mut self, x: VarId, row: VarId) -> Result<VarId, AutodiffError> {
        let xv = &self.nodes[x.0].value;
        let rv = &self.nodes[row.0].value;
        if rv.nrows() != 1 || rv.ncols() != xv.ncols() {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_row_broadcast",
                lhs: xv.dim(),
                rhs: rv.dim(),
            });
        }
        let out = xv + rv;
        Ok(self.push(
            out,
            Some(Box::new(move |g| {
                let row_grad = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                vec![(x.0, g.clone()), (row.0, row_grad)]
            })),
        ))
    }

    /// Row-wise shift-stable softmax.
    pub fn softmax_rows(&mut self, x: VarId) -> VarId {
        let xv = &self.nodes[x.0].value;
        let mut out = xv.clone();
        for mut row in out.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
            let sum = row.sum();
            row.mapv_inplace(|v| v / sum);
        }
        let y = out.clone();
        self.push(
            out,
            Some(Box::new(move |g| {
                let mut dx = g * &y;
                for (mut drow, (grow, yrow)) in
                    dx.rows_mut().into_iter().zip(g.rows().into_iter().zip(y.rows()))
                {
                    let dot: f64 = grow.iter().zip(yrow.iter()).map(|(a, b)| a * b).sum();
                    drow.zip_mut_with(&yrow.to_owned(), |d, &yv| *d -= dot * yv);
                }
                vec![(x.0, dx)]
            })),
        )
    }

    /// Row-wise layer normalization with learnable `gamma`/`beta` rows.
    pub fn layer_norm_rows(
        &mut self,
        x: VarId,
        gamma: VarId,
        beta: VarId,
        eps: f64,
    ) -> Result<VarId, AutodiffError> {
        let xv = self.nodes[x.0].value.clone();
        let gv = self.nodes[gamma.0].value.clone();
        let bv = &self.nodes[beta.0].value;
        let d = xv.ncols();
        if gv.dim() != (1, d) || bv.dim() != (1, d) {
            return Err(AutodiffError::ShapeMismatch {
                op: "layer_norm_rows",
                lhs: xv.dim(),
                rhs: gv.dim(),
            });
        }
        let mut xhat = Array2::zeros(xv.dim());
        let mut inv_std = Vec::with_capacity(xv.nrows());
        for (i, row) in xv.rows().into_iter().enumerate() {
            let mean = row.mean().unwrap();
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std.push(inv);
            for (j, &v) in row.iter().enumerate() {
                xhat[(i, j)] = (v - mean) * inv;
            }
        }
        let out = &xhat * &gv + bv;
        Ok(self.push(
            out,
            Some(Box::new(move |g| {
                let dgamma = (g * &xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
                let dbeta = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                let dxhat = g * &gv;
                let mut dx = Array2::zeros(dxhat.dim());
                for i in 0..dxhat.nrows() {
                    let dxh = dxhat.row(i);
                    let xh = xhat.row(i);
                    let mean_dxh = dxh.mean().unwrap();
                    let mean_dxh_xh =
                        dxh.iter().zip(xh.iter()).map(|(a, b)| a * b).sum::<f64>() / d as f64;
                    for j in 0..d {
                        dx[(i, j)] = inv_std[i] * (dxh[j] - mean_dxh - xh[j] * mean_dxh_xh);
                    }
                }
                vec![(x.0, dx), (gamma.0, dgamma), (beta.0, dbeta)]
            })),
        ))
    }

    /// GELU with the tanh approximation.
    pub fn gelu(&mut self, x: VarId) -> VarId {
        const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
        const A: f64 = 0.044715;
        let xv = self.nodes[x.0].value.clone();
        let out = xv.mapv(|v| 0.5 * v * (1.0 + (C * (v + A * v.powi(3))).tanh()));
        self.push(
            out,
            Some(Box::new(move |g| {
                let dx = xv.mapv(|v| {
                    let t = (C * (v + A * v.powi(3))).tanh();
                    0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * C * (1.0 + 3.0 * A * v * v)
                });
                vec![(x.0, g * &dx)]
            })),
        )
    }

    /// Build a matrix whose row `r` is row `sources[r].1` of variable
    /// `sources[r].0`. Generalizes row gather, concatenation, and token
    /// re-assembly; the backward pass scatter-adds into each parent.
    pub fn select_rows(&mut self, sources: &[(VarId, usize)]) -> Result<VarId, AutodiffError> {
        assert!(!sources.is_empty(), "select_rows needs at least one row");
        let cols = self.nodes[sources[0].0 .0].value.ncols();
        let mut out = Array2::zeros((sources.len(), cols));
        for (r, &(v, row)) in sources.iter().enumerate() {
            let val = &self.nodes[v.0].value;
            if val.ncols() != cols {
                return Err(AutodiffError::ShapeMismatch {
                    op: "select_rows",
                    lhs: (1, cols),
                    rhs: val.dim(),
                });
            }
            out.row_mut(r).assign(&val.row(row));
        }
        let spec: Vec<(usize, usize)> = sources.iter().map(|&(v, r)| (v.0, r)).collect();
        let parent_dims: Vec<(usize, (usize, usize))> = {
            let mut seen = Vec::new();
            for &(p, _) in &spec {
                if !seen.iter().any(|&(q, _)| q == p) {
                    seen.push((p, self.nodes[p].value.dim()));
                }
            }
            seen
        };
        Ok(self.push(
            out,
            Some(Box::new(move |g| {
                let mut grads: Vec<(usize, Array2<f64>)> = parent_dims
                    .iter()
                    .map(|&(p, dim)| (p, Array2::zeros(dim)))
                    .collect();
                for (r, &(p, row)) in spec.iter().enumerate() {
                    let slot = grads.iter_mut().find(|(q, _)| *q == p).unwrap();
                    let mut target = slot.1.row_mut(row);
                    target += &g.row(r);
                }
                grads
            })),
        ))
    }

    pub fn gather_rows(&mut self, x: VarId, rows: &[usize]) -> Result<VarId, AutodiffError> {
        let spec: Vec<(VarId, usize)> = rows.iter().map(|&r| (x, r)).collect();
        self.select_rows(&spec)
    }

    pub fn concat_rows(&mut self, parts: &[VarId]) -> Result<VarId, AutodiffError> {
        let mut spec = Vec::new();
        for &p in parts {
            for r in 0..self.nodes[p.0].value.nrows() {
                spec.push((p, r));
            }
        }
        self.select_rows(&spec)
    }

    pub fn slice_cols(&mut self, x: VarId, start: usize, len: usize) -> VarId {
        let xv = &self.nodes[x.0].value;
        let dim = xv.dim();
        let out = xv.slice(s![.., start..start + len]).to_owned();
        self.push(
            out,
            Some(Box::new(move |g| {
                let mut dx = Array2::zeros(dim);
                dx.slice_mut(s![.., start..start + len]).assign(g);
                vec![(x.0, dx)]
            })),
        )
    }

    pub fn concat_cols(&mut self, parts: &[VarId]) -> Result<VarId, AutodiffError> {
        assert!(!parts.is_empty());
        let rows = self.nodes[parts[0].0].value.nrows();
        let widths: Vec<usize> = parts.iter().map(|p| self.nodes[p.0].value.ncols()).collect();
        let total: usize = widths.iter().sum();
        let mut out = Array2::zeros((rows, total));
        let mut offset = 0;
        for (&p, &w) in parts.iter().zip(&widths) {
            let v = &self.nodes[p.0].value;
            if v.nrows() != rows {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: (rows, total),
                    rhs: v.dim(),
                });
            }
            out.slice_mut(s![.., offset..offset + w]).assign(v);
            offset += w;
        }
        let parents: Vec<usize> = parts.iter().map(|p| p.0).collect();
        Ok(self.push(
            out,
            Some(Box::new(move |g| {
                let mut grads = Vec::with_capacity(parents.len());
                let mut offset = 0;
                for (&p, &w) in parents.iter().zip(&widths) {
                    grads.push((p, g.slice(s![.., offset..offset + w]).to_owned()));
                    offset += w;
                }
                grads
            })),
        ))
    }

    /// Mean over all entries, as a 1x1 scalar.
    pub fn mean_all(&mut self, x: VarId) -> VarId {
        let xv = &self.nodes[x.0].value;
        let (r, c) = xv.dim();
        let n = (r * c) as f64;
        let out = Array2::from_elem((1, 1), xv.sum() / n);
        self.push(
            out,
            Some(Box::new(move |g| {
                vec![(x.0, Array2::from_elem((r, c), g[(0, 0)] / n))]
            })),
        )
    }

    /// Column means, as a single row.
    pub fn mean_rows(&mut self, x: VarId) -> VarId {
        let xv = &self.nodes[x.0].value;
        let (r, _c) = xv.dim();
        let out = (xv.sum_axis(Axis(0)) / r as f64).insert_axis(Axis(0));
        self.push(
            out,
            Some(Box::new(move |g| {
                let mut dx = Array2::zeros((r, g.ncols()));
                for mut row in dx.rows_mut() {
                    row.assign(&(g.row(0).to_owned() / r as f64));
                }
                vec![(x.0, dx)]
            })),
        )
    }

    /// Cross-entropy of a single logit row against a fixed soft target:
    /// `-Σ t·log_softmax(logits)`. The backward pass is the closed form
    /// `softmax(logits) - t`.
    pub fn cross_entropy_logits(
        &mut self,
        logits: VarId,
        target: &Array2<f64>,
    ) -> Result<VarId, AutodiffError> {
        let lv = &self.nodes[logits.0].value;
        if lv.dim() != target.dim() || lv.nrows() != 1 {
            return Err(AutodiffError::ShapeMismatch {
                op: "cross_entropy_logits",
                lhs: lv.dim(),
                rhs: target.dim(),
            });
        }
        let max = lv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let shifted = lv.mapv(|v| v - max);
        let lse = shifted.mapv(f64::exp).sum().ln();
        let log_probs = shifted.mapv(|v| v - lse);
        let loss = -(target * &log_probs).sum();
        let probs = log_probs.mapv(f64::exp);
        let t = target.clone();
        Ok(self.push(
            Array2::from_elem((1, 1), loss),
            Some(Box::new(move |g| {
                vec![(logits.0, (&probs - &t) * g[(0, 0)])]
            })),
        ))
    }

    /// Reverse traversal from a scalar root. Consumes the backward
    /// closures, so it can run at most once per tape.
    pub fn backward(&mut self, root: VarId) -> Result<Gradients, AutodiffError> {
        let dim = self.nodes[root.0].value.dim();
        if dim != (1, 1) {
            return Err(AutodiffError::NonScalarRoot(dim.0, dim.1));
        }
        let mut grads: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Array2::ones((1, 1)));
        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].clone() else { continue };
            if let Some(f) = self.nodes[i].backward.take() {
                for (p, contrib) in f(&g) {
                    match &mut grads[p] {
                        Some(acc) => *acc += &contrib,
                        slot => *slot = Some(contrib),
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
    }

    /// Central finite-difference check of d(scalar graph)/d(inputs).
    fn fd_check<F>(inputs: &[Array2<f64>], tol: f64, build: F)
    where
        F: Fn(&mut Tape, &[VarId]) -> VarId,
    {
        let mut tape = Tape::new();
        let vars: Vec<VarId> = inputs.iter().map(|v| tape.leaf(v.clone())).collect();
        let root = build(&mut tape, &vars);
        assert_eq!(tape.value(root).dim(), (1, 1));
        let grads = tape.backward(root).unwrap();

        for (k, input) in inputs.iter().enumerate() {
            let analytic = grads
                .get(vars[k])
                .cloned()
                .unwrap_or_else(|| Array2::zeros(input.dim()));
            for idx in 0..input.len() {
                let (r, c) = (idx / input.ncols(), idx % input.ncols());
                let h = 1e-5 * input[(r, c)].abs().max(1.0);
                let eval = |delta: f64| {
                    let mut tape = Tape::new();
                    let mut vars = Vec::new();
                    for (j, v) in inputs.iter().enumerate() {
                        let mut v = v.clone();
                        if j == k {
                            v[(r, c)] += delta;
                        }
                        vars.push(tape.leaf(v));
                    }
                    let root = build(&mut tape, &vars);
                    tape.value(root)[(0, 0)]
                };
                let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                let a = analytic[(r, c)];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
                assert!(
                    rel <= tol,
                    "input {k} entry ({r},{c}): analytic {a}, numeric {numeric}, rel {rel}"
                );
            }
        }
    }

    #[test]
    fn matmul_and_add_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 3, 4);
        let b = random_matrix(&mut rng, 4, 2);
        let c = random_matrix(&mut rng, 3, 2);
        fd_check(&[a, b, c], 1e-7, |t, v| {
            let m = t.matmul(v[0], v[1]).unwrap();
            let s = t.add(m, v[2]).unwrap();
            let sq = t.hadamard(s, s).unwrap();
            t.mean_all(sq)
        });
    }

    #[test]
    fn softmax_layernorm_gelu_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_matrix(&mut rng, 4, 5);
        let gamma = random_matrix(&mut rng, 1, 5);
        let beta = random_matrix(&mut rng, 1, 5);
        let w = random_matrix(&mut rng, 4, 5);
        fd_check(&[x, gamma, beta, w.clone()], 1e-6, move |t, v| {
            let ln = t.layer_norm_rows(v[0], v[1], v[2], 1e-6).unwrap();
            let sm = t.softmax_rows(ln);
            let ge = t.gelu(sm);
            let weighted = t.hadamard(ge, v[3]).unwrap();
            t.mean_all(weighted)
        });
    }

    #[test]
    fn row_and_col_rearrangement_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 5, 6);
        let y = random_matrix(&mut rng, 2, 6);
        fd_check(&[x, y], 1e-7, |t, v| {
            let picked = t
                .select_rows(&[(v[0], 4), (v[1], 0), (v[0], 4), (v[1], 1)])
                .unwrap();
            let left = t.slice_cols(picked, 0, 3);
            let right = t.slice_cols(picked, 3, 3);
            let swapped = t.concat_cols(&[right, left]).unwrap();
            let tr = t.transpose(swapped);
            let sq = t.hadamard(tr, tr).unwrap();
            t.mean_all(sq)
        });
    }

    #[test]
    fn broadcast_and_reduction_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_matrix(&mut rng, 4, 3);
        let bias = random_matrix(&mut rng, 1, 3);
        fd_check(&[x, bias], 1e-7, |t, v| {
            let shifted = t.add_row_broadcast(v[0], v[1]).unwrap();
            let pooled = t.mean_rows(shifted);
            let sq = t.hadamard(pooled, pooled).unwrap();
            t.mean_all(sq)
        });
    }

    #[test]
    fn cross_entropy_matches_closed_form() {
        let logits = Array2::from_shape_vec((1, 4), vec![0.5, -1.0, 2.0, 0.0]).unwrap();
        let mut target = Array2::zeros((1, 4));
        target[(0, 2)] = 1.0;
        let mut tape = Tape::new();
        let lv = tape.leaf(logits.clone());
        let loss = tape.cross_entropy_logits(lv, &target).unwrap();
        let grads = tape.backward(loss).unwrap();
        let g = grads.get(lv).unwrap();
        let probs = crate::numeric::softmax_stable(logits.row(0).as_slice().unwrap()).unwrap();
        for j in 0..4 {
            let expected = probs[j] - target[(0, j)];
            assert!((g[(0, j)] - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn cross_entropy_fd_with_soft_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let logits = random_matrix(&mut rng, 1, 6);
        let target =
            Array2::from_shape_vec((1, 6), vec![0.1, 0.0, 0.3, 0.2, 0.4, 0.0]).unwrap();
        fd_check(&[logits], 1e-7, move |t, v| {
            t.cross_entropy_logits(v[0], &target).unwrap()
        });
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf(Array2::from_elem((2, 2), 3.0));
        let c = tape.constant(Array2::from_elem((2, 2), 5.0));
        // x - x + c: d/dx must be exactly zero.
        let diff = tape.sub(x, x).unwrap();
        let sum = tape.add(diff, c).unwrap();
        let loss = tape.mean_all(sum);
        let grads = tape.backward(loss).unwrap();
        let g = grads.get(x).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_requires_scalar_root() {
        let mut tape = Tape::new();
        let x = tape.leaf(Array2::zeros((2, 3)));
        assert_eq!(
            tape.backward(x).err(),
            Some(AutodiffError::NonScalarRoot(2, 3))
        );
    }
}
