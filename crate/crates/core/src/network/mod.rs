//! The residual feed-forward classifier.
//!
//! Input is the projected score vector z (length q_1). The first layer
//! applies H_{j,l} = a_{j,l} * ReLU(c_{j,l} + z_{j,l}) elementwise. The
//! output is sigma*( b^T H + W_out sigma(... sigma(W_1 H)) ), where the
//! residual matrix b and the first hidden matrix W_1 are partitioned into
//! per-feature row blocks; feature selection zeroes whole blocks.

mod adam;
mod io;
mod loss;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use io::{load_model, save_model, SavedModel};
pub use loss::{loss_cross_entropy, loss_hinge, LossKind, PROB_FLOOR};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputActivation {
    /// Raw logit; used with hinge loss and output dim 1.
    Identity,
    /// K-dimensional softmax; used with cross-entropy.
    Softmax,
}

/// Network shape: per-feature truncations, hidden stack and output head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// q_{1j}: number of projected scores per feature.
    pub feature_truncations: Vec<usize>,
    /// Widths of the L hidden ReLU layers (L >= 1).
    pub hidden_widths: Vec<usize>,
    /// 1 for binary hinge mode, K otherwise.
    pub output_dim: usize,
    /// Dropout rate gamma in [0,1), applied to hidden activations.
    pub dropout: f64,
    pub output_activation: OutputActivation,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.feature_truncations.is_empty() || self.feature_truncations.iter().any(|&q| q == 0) {
            return Err(Error::Invalid("feature truncations must be nonempty and >= 1".into()));
        }
        if self.hidden_widths.is_empty() || self.hidden_widths.iter().any(|&w| w == 0) {
            return Err(Error::Invalid("need at least one hidden layer of width >= 1".into()));
        }
        if self.output_dim == 0 {
            return Err(Error::Invalid("output dim must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Invalid("dropout rate must be in [0,1)".into()));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.feature_truncations.len()
    }

    /// q_1: total input width.
    pub fn q1(&self) -> usize {
        self.feature_truncations.iter().sum()
    }

    /// (offset, len) of feature j's block in the q_1-length axis.
    pub fn feature_block(&self, j: usize) -> (usize, usize) {
        let offset = self.feature_truncations[..j].iter().sum();
        (offset, self.feature_truncations[j])
    }

    /// Dimensions of the weight matrices, input to output.
    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut prev = self.q1();
        for &w in &self.hidden_widths {
            dims.push((prev, w));
            prev = w;
        }
        dims.push((prev, self.output_dim));
        dims
    }
}

/// All trainable weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// First-layer scales a_{j,l}, length q_1.
    pub scale: Array1<f64>,
    /// First-layer shifts c_{j,l}, length q_1.
    pub shift: Array1<f64>,
    /// Residual block b, q_1 x output_dim; rows grouped by feature.
    pub residual: Array2<f64>,
    /// Hidden stack: L hidden matrices followed by the output matrix.
    /// `layers[0]` is the penalized W_1 whose row blocks obey the hierarchy
    /// constraint ||W_1^(j)||_inf <= C ||b_j||.
    pub layers: Vec<Array2<f64>>,
}

impl NetworkParams {
    pub fn zeros(arch: &Architecture) -> Self {
        let q1 = arch.q1();
        NetworkParams {
            scale: Array1::zeros(q1),
            shift: Array1::zeros(q1),
            residual: Array2::zeros((q1, arch.output_dim)),
            layers: arch.layer_dims().iter().map(|&(i, o)| Array2::zeros((i, o))).collect(),
        }
    }

    /// Frobenius norm of feature j's residual block.
    pub fn residual_norm(&self, arch: &Architecture, j: usize) -> f64 {
        let (off, len) = arch.feature_block(j);
        self.residual
            .slice(ndarray::s![off..off + len, ..])
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Indices (0-based) of features with nonzero residual norm.
    pub fn selected_features(&self, arch: &Architecture) -> Vec<usize> {
        (0..arch.n_features())
            .filter(|&j| self.residual_norm(arch, j) != 0.0)
            .collect()
    }

    /// Mutable flat views over every tensor, in a fixed order.
    pub(crate) fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(3 + self.layers.len());
        out.push(self.scale.as_slice_mut().unwrap());
        out.push(self.shift.as_slice_mut().unwrap());
        out.push(self.residual.as_slice_mut().unwrap());
        for l in &mut self.layers {
            out.push(l.as_slice_mut().unwrap());
        }
        out
    }

    pub(crate) fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(3 + self.layers.len());
        out.push(self.scale.as_slice().unwrap());
        out.push(self.shift.as_slice().unwrap());
        out.push(self.residual.as_slice().unwrap());
        for l in &self.layers {
            out.push(l.as_slice().unwrap());
        }
        out
    }

    /// Flatten every tensor into one vector (fixed order, row-major).
    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    /// Inverse of [`to_flat`]; panics on length mismatch.
    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut pos = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&flat[pos..pos + s.len()]);
            pos += s.len();
        }
        assert_eq!(pos, flat.len(), "flat parameter vector length mismatch");
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Gradients share the parameter container.
pub type Gradients = NetworkParams;

/// He-style initialization: every tensor is zero-mean Gaussian with variance
/// 2 / fan-in. Deterministic given `seed`.
pub fn init_params(arch: &Architecture, seed: u64) -> Result<NetworkParams> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = NetworkParams::zeros(arch);

    // a and c act on a single score each: fan-in 1.
    let scalar = Normal::new(0.0, 2.0f64.sqrt()).unwrap();
    for v in params.scale.iter_mut() {
        *v = scalar.sample(&mut rng);
    }
    for v in params.shift.iter_mut() {
        *v = scalar.sample(&mut rng);
    }
    for j in 0..arch.n_features() {
        let (off, len) = arch.feature_block(j);
        let dist = Normal::new(0.0, (2.0 / len as f64).sqrt()).unwrap();
        for r in off..off + len {
            for k in 0..arch.output_dim {
                params.residual[[r, k]] = dist.sample(&mut rng);
            }
        }
    }
    for layer in params.layers.iter_mut() {
        let fan_in = layer.nrows();
        let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
        for v in layer.iter_mut() {
            *v = dist.sample(&mut rng);
        }
    }
    Ok(params)
}

/// First-layer transform H_{j,l} = a_{j,l} ReLU(c_{j,l} + z_{j,l}).
pub fn first_layer(scores: ArrayView1<f64>, params: &NetworkParams) -> Result<Array1<f64>> {
    if scores.len() != params.scale.len() {
        return Err(Error::Shape(format!(
            "{} scores, first layer expects {}",
            scores.len(),
            params.scale.len()
        )));
    }
    Ok(Array1::from_iter(scores.iter().zip(&params.scale).zip(&params.shift).map(
        |((&z, &a), &c)| a * (c + z).max(0.0),
    )))
}

#[derive(Debug, Clone, Copy)]
pub enum Mode {
    Train { dropout_seed: u64 },
    Eval,
}

struct ForwardCache {
    /// Pre-ReLU first-layer arguments c + z.
    pre: Array2<f64>,
    /// Activations entering each weight matrix; acts[0] = H.
    acts: Vec<Array2<f64>>,
    /// Pre-activation outputs of the hidden matrices.
    hidden_pre: Vec<Array2<f64>>,
    /// Inverted-dropout masks per hidden layer (empty when disabled).
    masks: Vec<Array2<f64>>,
    logits: Array2<f64>,
}

fn dropout_masks(arch: &Architecture, batch: usize, seed: u64) -> Vec<Array2<f64>> {
    let gamma = arch.dropout;
    if gamma == 0.0 {
        return Vec::new();
    }
    let keep = 1.0 - gamma;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    arch.hidden_widths
        .iter()
        .map(|&w| {
            Array2::from_shape_fn((batch, w), |_| {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
        })
        .collect()
}

fn forward_cached(
    params: &NetworkParams,
    arch: &Architecture,
    scores: ArrayView2<f64>,
    mode: Mode,
) -> Result<ForwardCache> {
    let q1 = arch.q1();
    if scores.ncols() != q1 {
        return Err(Error::Shape(format!(
            "score batch has {} columns, architecture expects {q1}",
            scores.ncols()
        )));
    }
    let batch = scores.nrows();
    let masks = match mode {
        Mode::Train { dropout_seed } => dropout_masks(arch, batch, dropout_seed),
        Mode::Eval => Vec::new(),
    };

    let mut pre = scores.to_owned();
    for mut row in pre.axis_iter_mut(Axis(0)) {
        row += &params.shift;
    }
    let mut h = pre.mapv(|v| v.max(0.0));
    for mut row in h.axis_iter_mut(Axis(0)) {
        row *= &params.scale;
    }

    let n_hidden = arch.hidden_widths.len();
    let mut acts = Vec::with_capacity(n_hidden + 1);
    let mut hidden_pre = Vec::with_capacity(n_hidden);
    acts.push(h);
    for l in 0..n_hidden {
        let u = acts[l].dot(&params.layers[l]);
        let mut x = u.mapv(|v| v.max(0.0));
        if let Some(mask) = masks.get(l) {
            x *= mask;
        }
        hidden_pre.push(u);
        acts.push(x);
    }
    let logits = acts[n_hidden].dot(&params.layers[n_hidden]) + acts[0].dot(&params.residual);
    Ok(ForwardCache {
        pre,
        acts,
        hidden_pre,
        masks,
        logits,
    })
}

/// Numerically stable softmax along rows.
fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Batched forward pass; rows are per-sample outputs after sigma*.
pub fn forward_batch(
    params: &NetworkParams,
    arch: &Architecture,
    scores: ArrayView2<f64>,
    mode: Mode,
) -> Result<Array2<f64>> {
    let cache = forward_cached(params, arch, scores, mode)?;
    Ok(match arch.output_activation {
        OutputActivation::Identity => cache.logits,
        OutputActivation::Softmax => softmax_rows(&cache.logits),
    })
}

/// Single-sample forward pass.
pub fn forward(
    params: &NetworkParams,
    arch: &Architecture,
    scores: ArrayView1<f64>,
    mode: Mode,
) -> Result<Array1<f64>> {
    let batch = scores.insert_axis(Axis(0));
    Ok(forward_batch(params, arch, batch, mode)?.row(0).to_owned())
}

/// Mean batch loss and exact gradients with respect to every trainable
/// parameter. Train-mode dropout masks are regenerated from `dropout_seed`
/// so they match the corresponding forward pass.
pub fn backward(
    params: &NetworkParams,
    arch: &Architecture,
    scores: ArrayView2<f64>,
    labels: &[usize],
    loss_kind: LossKind,
    mode: Mode,
) -> Result<(f64, Gradients)> {
    let batch = scores.nrows();
    if batch == 0 {
        return Err(Error::Invalid("empty batch".into()));
    }
    if labels.len() != batch {
        return Err(Error::Shape(format!("{} labels for batch of {batch}", labels.len())));
    }
    let cache = forward_cached(params, arch, scores, mode)?;
    let k = arch.output_dim;

    // d loss / d logits, already scaled by 1/batch.
    let (loss, dlogits) = match loss_kind {
        LossKind::CrossEntropy => {
            let probs = softmax_rows(&cache.logits);
            let mut total = 0.0;
            let mut d = probs.clone();
            for (i, &y) in labels.iter().enumerate() {
                if y < 1 || y > k {
                    return Err(Error::Invalid(format!("label {y} outside 1..={k}")));
                }
                total += -(probs[[i, y - 1]].max(PROB_FLOOR)).ln();
                d[[i, y - 1]] -= 1.0;
            }
            (total / batch as f64, d / batch as f64)
        }
        LossKind::Hinge => {
            if k != 1 {
                return Err(Error::Invalid("hinge loss requires output dim 1".into()));
            }
            let mut total = 0.0;
            let mut d = Array2::zeros((batch, 1));
            for (i, &y) in labels.iter().enumerate() {
                if y != 1 && y != 2 {
                    return Err(Error::Invalid(format!("hinge label {y} outside {{1,2}}")));
                }
                let u = (2.0 * y as f64) - 3.0;
                let margin = 1.0 - u * cache.logits[[i, 0]];
                if margin > 0.0 {
                    total += margin;
                    d[[i, 0]] = -u;
                }
            }
            (total / batch as f64, d / batch as f64)
        }
    };

    let n_hidden = arch.hidden_widths.len();
    let mut grads = NetworkParams::zeros(arch);

    // Force C layout: matrix products with a unit dimension can come back
    // column-major, which would break the flat parameter views.
    fn c_order(a: Array2<f64>) -> Array2<f64> {
        if a.is_standard_layout() {
            a
        } else {
            a.as_standard_layout().to_owned()
        }
    }
    grads.residual = c_order(cache.acts[0].t().dot(&dlogits));
    grads.layers[n_hidden] = c_order(cache.acts[n_hidden].t().dot(&dlogits));

    // d loss / d x_l, walking the hidden stack backwards.
    let mut dx = dlogits.dot(&params.layers[n_hidden].t());
    for l in (0..n_hidden).rev() {
        let mut du = dx;
        if let Some(mask) = cache.masks.get(l) {
            du *= mask;
        }
        du.zip_mut_with(&cache.hidden_pre[l], |g, &u| {
            if u <= 0.0 {
                *g = 0.0;
            }
        });
        grads.layers[l] = c_order(cache.acts[l].t().dot(&du));
        dx = du.dot(&params.layers[l].t());
    }
    // Residual path contribution to dH.
    dx += &dlogits.dot(&params.residual.t());

    // First layer: H = a * relu(c + z).
    for i in 0..batch {
        for col in 0..arch.q1() {
            let pre = cache.pre[[i, col]];
            if pre > 0.0 {
                let g = dx[[i, col]];
                grads.scale[col] += g * pre;
                grads.shift[col] += g * params.scale[col];
            }
        }
    }

    Ok((loss, grads))
}

/// Class label from an eval-mode output vector.
///
/// Identity mode: 2 when the score is >= 0, else 1. Softmax mode: argmax,
/// ties toward the lowest class index.
pub fn predict_label(output: ArrayView1<f64>, activation: OutputActivation) -> usize {
    match activation {
        OutputActivation::Identity => {
            if output[0] >= 0.0 {
                2
            } else {
                1
            }
        }
        OutputActivation::Softmax => {
            let mut best = 0;
            for (i, &v) in output.iter().enumerate() {
                if v > output[best] {
                    best = i;
                }
            }
            best + 1
        }
    }
}
