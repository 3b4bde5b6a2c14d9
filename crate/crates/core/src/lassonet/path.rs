//! Dense-to-sparse path training: a dense Adam warm-up followed by
//! geometrically inflated penalty steps, each mixing Adam updates with the
//! per-feature hierarchical proximal update, until no features survive.

use ndarray::{s, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::prox::{hier_prox, HierProxOutcome, ProxConfig, ProxRule};
use crate::error::{Error, Result};
use crate::network::{
    adam_step, backward, forward_batch, AdamConfig, AdamState, Architecture, LossKind, Mode,
    NetworkParams, PROB_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatchLogBase {
    /// Batch size 2^floor(ln n) (natural log, the default).
    Natural,
    /// Batch size 2^floor(log2 n).
    Two,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathConfig {
    /// Starting penalty; when absent it is set to 1e-3 times the mean
    /// absolute residual-block gradient observed during the dense phase.
    pub lambda0: Option<f64>,
    /// Path multiplier delta: lambda grows by (1 + delta) per step.
    pub delta: f64,
    /// Dense warm-up epochs (no penalty).
    pub warmup_epochs: usize,
    /// Epochs per path step.
    pub epochs_per_step: usize,
    pub batch_log_base: BatchLogBase,
    /// Explicit batch size; overrides the log rule when set.
    pub batch_size: Option<usize>,
    /// Hard ceiling: the path stops once lambda exceeds this.
    pub lambda_max: f64,
    pub adam: AdamConfig,
    pub loss: LossKind,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            lambda0: None,
            delta: 0.02,
            warmup_epochs: 200,
            epochs_per_step: 20,
            batch_log_base: BatchLogBase::Natural,
            batch_size: None,
            lambda_max: 1e9,
            adam: AdamConfig::default(),
            loss: LossKind::CrossEntropy,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::Invalid("path multiplier delta must be > 0".into()));
        }
        if self.epochs_per_step == 0 {
            return Err(Error::Invalid("epochs per path step must be >= 1".into()));
        }
        if let Some(l0) = self.lambda0 {
            if !(l0 > 0.0) {
                return Err(Error::Invalid("lambda0 must be > 0".into()));
            }
        }
        Ok(())
    }

    pub fn effective_batch(&self, n: usize) -> usize {
        let b = self.batch_size.unwrap_or_else(|| {
            let log = match self.batch_log_base {
                BatchLogBase::Natural => (n as f64).ln(),
                BatchLogBase::Two => (n as f64).log2(),
            };
            1usize << (log.floor().max(0.0) as u32).min(30)
        });
        b.clamp(1, n)
    }
}

/// Snapshot recorded after each path step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathCheckpoint {
    pub lambda: f64,
    pub params: NetworkParams,
    /// Count of features with nonzero residual norm.
    pub p0: usize,
    /// 0-based indices of the surviving features.
    pub selected: Vec<usize>,
    pub train_loss: f64,
}

#[derive(Debug, Clone)]
pub struct PathOutcome {
    pub checkpoints: Vec<PathCheckpoint>,
    /// True when training hit a non-finite loss; `checkpoints` then holds
    /// everything recorded up to the last good step.
    pub diverged: bool,
    /// Paper-rule bracket misses that fell back to the group search.
    pub prox_fallbacks: usize,
}

struct Trainer<'a> {
    scores: ArrayView2<'a, f64>,
    labels: &'a [usize],
    arch: &'a Architecture,
    params: NetworkParams,
    adam: AdamState,
    cfg: &'a PathConfig,
    batch: usize,
    shuffle_rng: ChaCha8Rng,
    step_counter: u64,
    dropout_base: u64,
    grad_b_abs_sum: f64,
    grad_b_abs_count: u64,
    prox_fallbacks: usize,
}

impl<'a> Trainer<'a> {
    /// One epoch of mini-batch Adam steps; `prox` applies the hierarchical
    /// update after each step. Returns false on non-finite loss.
    fn epoch(&mut self, prox: Option<&ProxConfig>) -> Result<bool> {
        let n = self.scores.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.shuffle_rng);
        for chunk in order.chunks(self.batch) {
            let batch_scores = self.scores.select(ndarray::Axis(0), chunk);
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| self.labels[i]).collect();
            self.step_counter += 1;
            let mode = if self.arch.dropout > 0.0 {
                Mode::Train {
                    dropout_seed: self.dropout_base.wrapping_add(self.step_counter),
                }
            } else {
                Mode::Eval
            };
            let (loss, grads) = backward(
                &self.params,
                self.arch,
                batch_scores.view(),
                &batch_labels,
                self.cfg.loss,
                mode,
            )?;
            if !loss.is_finite() {
                return Ok(false);
            }
            let abs_sum: f64 = grads.residual.iter().map(|v| v.abs()).sum();
            self.grad_b_abs_sum += abs_sum / grads.residual.len() as f64;
            self.grad_b_abs_count += 1;

            adam_step(&mut self.params, &grads, &mut self.adam, &self.cfg.adam);

            if let Some(pc) = prox {
                self.apply_prox(pc)?;
            }
            if !self.params.is_finite() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn apply_prox(&mut self, pc: &ProxConfig) -> Result<()> {
        let t = pc.threshold();
        for j in 0..self.arch.n_features() {
            let (off, len) = self.arch.feature_block(j);
            let (b_new, w_new, outcome) = {
                let b_block = self.params.residual.slice(s![off..off + len, ..]);
                let w_block = self.params.layers[0].slice(s![off..off + len, ..]);
                hier_prox(b_block, w_block, t, pc.hierarchy_c, pc.rule)?
            };
            if pc.rule == ProxRule::Paper && outcome == HierProxOutcome::GroupSearch {
                self.prox_fallbacks += 1;
            }
            self.params
                .residual
                .slice_mut(s![off..off + len, ..])
                .assign(&b_new);
            self.params.layers[0]
                .slice_mut(s![off..off + len, ..])
                .assign(&w_new);
        }
        Ok(())
    }

    /// Mean loss over the whole training set, eval mode.
    fn full_loss(&self) -> Result<f64> {
        let outputs = forward_batch(&self.params, self.arch, self.scores, Mode::Eval)?;
        let n = self.scores.nrows();
        let mut total = 0.0;
        for (i, &y) in self.labels.iter().enumerate() {
            total += match self.cfg.loss {
                LossKind::CrossEntropy => -(outputs[[i, y - 1]].max(PROB_FLOOR)).ln(),
                LossKind::Hinge => {
                    let u = (2.0 * y as f64) - 3.0;
                    (1.0 - u * outputs[[i, 0]]).max(0.0)
                }
            };
        }
        Ok(total / n as f64)
    }

    fn mean_abs_grad_b(&self) -> f64 {
        if self.grad_b_abs_count == 0 {
            0.0
        } else {
            self.grad_b_abs_sum / self.grad_b_abs_count as f64
        }
    }
}

/// Train the full dense-to-sparse path. Deterministic given `(seed, config)`.
pub fn train_path<'a>(
    scores: ArrayView2<'a, f64>,
    labels: &'a [usize],
    arch: &'a Architecture,
    prox_cfg: &ProxConfig,
    path_cfg: &'a PathConfig,
    seed: u64,
) -> Result<PathOutcome> {
    arch.validate()?;
    path_cfg.validate()?;
    if scores.nrows() == 0 {
        return Err(Error::Invalid("empty training set".into()));
    }
    if scores.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} score rows but {} labels",
            scores.nrows(),
            labels.len()
        )));
    }

    let params = crate::network::init_params(arch, seed)?;
    let mut trainer = Trainer {
        scores,
        labels,
        arch,
        params,
        adam: AdamState::new(arch),
        cfg: path_cfg,
        batch: path_cfg.effective_batch(scores.nrows()),
        shuffle_rng: ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1)),
        step_counter: 0,
        dropout_base: seed.wrapping_mul(0xD1B54A32D192ED03).wrapping_add(2),
        grad_b_abs_sum: 0.0,
        grad_b_abs_count: 0,
        prox_fallbacks: 0,
    };

    // Dense warm-up: unpenalized Adam only.
    for _ in 0..path_cfg.warmup_epochs {
        if !trainer.epoch(None)? {
            return Ok(PathOutcome {
                checkpoints: Vec::new(),
                diverged: true,
                prox_fallbacks: trainer.prox_fallbacks,
            });
        }
    }
    if trainer.grad_b_abs_count == 0 {
        // Need at least one gradient observation for the auto lambda0.
        if !trainer.epoch(None)? {
            return Ok(PathOutcome {
                checkpoints: Vec::new(),
                diverged: true,
                prox_fallbacks: trainer.prox_fallbacks,
            });
        }
    }

    let mut lambda = match path_cfg.lambda0 {
        Some(l0) => l0,
        None => {
            let scale = trainer.mean_abs_grad_b();
            if scale > 0.0 {
                1e-3 * scale
            } else {
                1e-6
            }
        }
    };

    let mut checkpoints: Vec<PathCheckpoint> = Vec::new();
    let mut diverged = false;
    loop {
        lambda *= 1.0 + path_cfg.delta;
        let prox = ProxConfig {
            lambda,
            ..*prox_cfg
        };
        let mut ok = true;
        for _ in 0..path_cfg.epochs_per_step {
            if !trainer.epoch(Some(&prox))? {
                ok = false;
                break;
            }
        }
        if !ok {
            diverged = true;
            break;
        }
        let selected = trainer.params.selected_features(arch);
        let p0 = selected.len();
        let train_loss = trainer.full_loss()?;
        checkpoints.push(PathCheckpoint {
            lambda,
            params: trainer.params.clone(),
            p0,
            selected,
            train_loss,
        });
        if p0 == 0 || lambda > path_cfg.lambda_max {
            break;
        }
    }

    Ok(PathOutcome {
        checkpoints,
        diverged,
        prox_fallbacks: trainer.prox_fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::OutputActivation;
    use ndarray::Array2;
    use rand::Rng;

    fn toy_problem(n: usize, p: usize, q: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
        // Feature 0 carries the signal, the rest are noise.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scores = Array2::zeros((n, p * q));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = (i % 3) + 1;
            labels.push(y);
            for c in 0..p * q {
                scores[[i, c]] = rng.gen_range(-1.0..1.0);
            }
            let shift = match y {
                1 => 2.0,
                2 => -2.0,
                _ => 0.0,
            };
            for l in 0..q {
                scores[[i, l]] += shift;
            }
        }
        (scores, labels)
    }

    fn toy_arch(p: usize, q: usize) -> Architecture {
        Architecture {
            feature_truncations: vec![q; p],
            hidden_widths: vec![8],
            output_dim: 3,
            dropout: 0.0,
            output_activation: OutputActivation::Softmax,
        }
    }

    fn quick_cfg() -> (ProxConfig, PathConfig) {
        (
            ProxConfig {
                hierarchy_c: 10.0,
                alpha: 0.001,
                lambda: 0.0,
                rule: ProxRule::GroupSearch,
            },
            PathConfig {
                warmup_epochs: 30,
                epochs_per_step: 3,
                delta: 0.3,
                ..PathConfig::default()
            },
        )
    }

    #[test]
    fn huge_lambda0_gives_single_empty_checkpoint() {
        let (scores, labels) = toy_problem(30, 3, 2, 1);
        let arch = toy_arch(3, 2);
        let (prox, mut path) = quick_cfg();
        path.lambda0 = Some(1e6);
        let out = train_path(scores.view(), &labels, &arch, &prox, &path, 5).unwrap();
        assert!(!out.diverged);
        assert_eq!(out.checkpoints.len(), 1);
        assert_eq!(out.checkpoints[0].p0, 0);
        assert!(out.checkpoints[0].selected.is_empty());
    }

    #[test]
    fn checkpoints_satisfy_hierarchy_constraint() {
        let (scores, labels) = toy_problem(45, 4, 2, 2);
        let arch = toy_arch(4, 2);
        let (prox, path) = quick_cfg();
        let out = train_path(scores.view(), &labels, &arch, &prox, &path, 6).unwrap();
        assert!(!out.checkpoints.is_empty());
        for ck in &out.checkpoints {
            for j in 0..4 {
                let (off, len) = arch.feature_block(j);
                let norm = ck.params.residual_norm(&arch, j);
                let winf = ck
                    .params
                    .layers[0]
                    .slice(s![off..off + len, ..])
                    .iter()
                    .map(|v| v.abs())
                    .fold(0.0, f64::max);
                assert!(winf <= prox.hierarchy_c * norm + 1e-10);
            }
            assert_eq!(ck.p0, ck.selected.len());
        }
        // path ends with everything dead
        assert_eq!(out.checkpoints.last().unwrap().p0, 0);
    }

    #[test]
    fn path_is_deterministic() {
        let (scores, labels) = toy_problem(30, 3, 2, 3);
        let arch = toy_arch(3, 2);
        let (prox, path) = quick_cfg();
        let a = train_path(scores.view(), &labels, &arch, &prox, &path, 9).unwrap();
        let b = train_path(scores.view(), &labels, &arch, &prox, &path, 9).unwrap();
        assert_eq!(a.checkpoints.len(), b.checkpoints.len());
        for (x, y) in a.checkpoints.iter().zip(&b.checkpoints) {
            assert_eq!(x.lambda, y.lambda);
            assert_eq!(x.params.to_flat(), y.params.to_flat());
            assert_eq!(x.selected, y.selected);
        }
    }

    #[test]
    fn signal_feature_outlives_noise() {
        let (scores, labels) = toy_problem(90, 4, 2, 4);
        let arch = toy_arch(4, 2);
        let (prox, mut path) = quick_cfg();
        path.warmup_epochs = 120;
        path.epochs_per_step = 5;
        path.delta = 0.2;
        let out = train_path(scores.view(), &labels, &arch, &prox, &path, 11).unwrap();
        // The last checkpoint with exactly one surviving feature should be
        // the signal feature (index 0).
        // The signal feature must be in every nonempty surviving set, and
        // at least one noise feature must die before the path empties.
        let mut saw_partial = false;
        for ck in &out.checkpoints {
            if ck.p0 > 0 {
                assert!(ck.selected.contains(&0), "signal dropped at lambda {}", ck.lambda);
            }
            if ck.p0 > 0 && ck.p0 < 4 {
                saw_partial = true;
            }
        }
        assert!(saw_partial, "no checkpoint with a partially pruned set");
    }
}
