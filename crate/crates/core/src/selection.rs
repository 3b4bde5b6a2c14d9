//! Hyperparameter selection over (architecture x basis) candidates: every
//! path checkpoint of every candidate is scored on the validation split,
//! either by the information criterion or by misclassification risk, and
//! the global minimizer wins.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::funcdata::{project_samples, split_dataset, BasisSpec, FunctionalDataset, SplitIndices};
use crate::lassonet::{train_path, PathCheckpoint};
use crate::network::{
    forward_batch, Architecture, LossKind, Mode, NetworkParams, OutputActivation, PROB_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// Validation negative log-likelihood plus 3*10^tau * p0 * ln(p)/n.
    Fbic,
    /// Validation misclassification risk.
    Mr,
}

/// One candidate: a network shape plus the basis producing its inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSpec {
    pub hidden_widths: Vec<usize>,
    pub basis: BasisSpec,
}

/// Depth x width grid from the config, one basis shared by all candidates.
pub fn candidate_grid(dataset: &FunctionalDataset, cfg: &RunConfig) -> Result<Vec<CandidateSpec>> {
    let per_feature: Vec<(usize, usize)> = dataset
        .feature_grids()
        .iter()
        .map(|g| {
            let d = g.sizes().len();
            (d, if d == 1 { cfg.q1_1d } else { cfg.q1_2d })
        })
        .collect();
    let basis = BasisSpec::cosine(&per_feature)?;
    let mut out = Vec::new();
    for &depth in &cfg.grid_depths {
        for &width in &cfg.grid_widths {
            out.push(CandidateSpec {
                hidden_widths: vec![width; depth],
                basis: basis.clone(),
            });
        }
    }
    Ok(out)
}

/// Additive decomposition of the selection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionParts {
    /// Negative log-likelihood sum (or the risk itself under `Mr`).
    pub loglik: f64,
    pub penalty: f64,
}

impl CriterionParts {
    pub fn total(&self) -> f64 {
        self.loglik + self.penalty
    }
}

/// Information criterion: sum of validation negative log class
/// probabilities plus 3 * 10^tau * p0 * ln(p) / n.
pub fn fbic(
    val_probs: ArrayView2<f64>,
    val_labels: &[usize],
    p0: usize,
    p: usize,
    n: usize,
    tau: i32,
) -> Result<CriterionParts> {
    if val_labels.is_empty() {
        return Err(Error::Invalid("empty validation set".into()));
    }
    if val_probs.nrows() != val_labels.len() {
        return Err(Error::Shape(format!(
            "{} probability rows but {} labels",
            val_probs.nrows(),
            val_labels.len()
        )));
    }
    if p < 1 || n < 1 {
        return Err(Error::Invalid("p and n must be >= 1".into()));
    }
    let k = val_probs.ncols();
    let mut loglik = 0.0;
    for (i, &y) in val_labels.iter().enumerate() {
        if y < 1 || y > k {
            return Err(Error::Invalid(format!("label {y} outside 1..={k}")));
        }
        loglik += -(val_probs[[i, y - 1]].max(PROB_FLOOR)).ln();
    }
    let penalty = 3.0 * 10f64.powi(tau) * p0 as f64 * (p as f64).ln() / n as f64;
    Ok(CriterionParts { loglik, penalty })
}

/// Fraction of mismatched predictions.
pub fn misclassification_risk(preds: &[usize], labels: &[usize]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Invalid("empty prediction list".into()));
    }
    if preds.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions but {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let wrong = preds.iter().zip(labels).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / preds.len() as f64)
}

/// One row of the criterion table: a (candidate, checkpoint) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionRow {
    pub candidate: usize,
    pub hidden_widths: Vec<usize>,
    pub truncations: Vec<usize>,
    pub lambda: f64,
    pub p0: usize,
    pub loglik: f64,
    pub penalty: f64,
    pub criterion: f64,
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    pub candidate: CandidateSpec,
    pub candidate_index: usize,
    pub architecture: Architecture,
    pub params: NetworkParams,
    pub lambda: f64,
    pub p0: usize,
    /// 0-based surviving feature indices.
    pub selected: Vec<usize>,
    pub criterion: Criterion,
    pub criterion_value: f64,
    pub loglik: f64,
    pub penalty: f64,
    pub table: Vec<CriterionRow>,
    pub split: SplitIndices,
    /// Set when a hinge-loss run forced risk-based selection.
    pub forced_mr: bool,
    /// Candidates whose paths diverged before any checkpoint.
    pub diverged_candidates: Vec<usize>,
}

pub fn architecture_for(
    candidate: &CandidateSpec,
    k: usize,
    loss: LossKind,
    dropout: f64,
) -> Architecture {
    let (output_dim, output_activation) = match loss {
        LossKind::Hinge => (1, OutputActivation::Identity),
        LossKind::CrossEntropy => (k, OutputActivation::Softmax),
    };
    Architecture {
        feature_truncations: candidate.basis.truncations(),
        hidden_widths: candidate.hidden_widths.clone(),
        output_dim,
        dropout,
        output_activation,
    }
}

struct CandidateEval {
    index: usize,
    rows: Vec<CriterionRow>,
    checkpoints: Vec<PathCheckpoint>,
    arch: Architecture,
    diverged_empty: bool,
}

fn predictions(probs: &Array2<f64>, activation: OutputActivation) -> Vec<usize> {
    (0..probs.nrows())
        .map(|i| crate::network::predict_label(probs.row(i), activation))
        .collect()
}

/// Run every candidate's path on the training split, score every checkpoint
/// on the validation split, and return the argmin. Ties break toward
/// smaller p0, then smaller lambda, then the earlier candidate. Test-split
/// samples are never read.
pub fn select_model(
    dataset: &FunctionalDataset,
    candidates: &[CandidateSpec],
    cfg: &RunConfig,
    criterion: Criterion,
    loss: LossKind,
    seed: u64,
) -> Result<SelectionResult> {
    if candidates.is_empty() {
        return Err(Error::Invalid("empty candidate grid".into()));
    }
    cfg.validate()?;
    let forced_mr = loss == LossKind::Hinge && criterion == Criterion::Fbic;
    let criterion = if forced_mr { Criterion::Mr } else { criterion };

    let split = split_dataset(dataset, cfg.split_ratios(), seed)?;
    let train_labels: Vec<usize> = split.train.iter().map(|&i| dataset.labels()[i]).collect();
    let val_labels: Vec<usize> = split
        .validation
        .iter()
        .map(|&i| dataset.labels()[i])
        .collect();
    let p = dataset.n_features();
    let n_for_penalty = cfg.criterion_n.unwrap_or(dataset.len());
    let path_cfg = cfg.path(loss);
    let prox_cfg = cfg.prox();

    let evals: Vec<Result<CandidateEval>> = candidates
        .par_iter()
        .enumerate()
        .map(|(ci, cand)| -> Result<CandidateEval> {
            let train_scores = project_samples(dataset, &cand.basis, &split.train)?;
            let val_scores = project_samples(dataset, &cand.basis, &split.validation)?;
            let arch = architecture_for(cand, dataset.k(), loss, cfg.dropout);
            let outcome = train_path(
                train_scores.view(),
                &train_labels,
                &arch,
                &prox_cfg,
                &path_cfg,
                seed.wrapping_add(1 + ci as u64),
            )?;
            let mut rows = Vec::with_capacity(outcome.checkpoints.len());
            for ck in &outcome.checkpoints {
                let outputs = forward_batch(&ck.params, &arch, val_scores.view(), Mode::Eval)?;
                let parts = match criterion {
                    Criterion::Fbic => {
                        fbic(outputs.view(), &val_labels, ck.p0, p, n_for_penalty, cfg.tau)?
                    }
                    Criterion::Mr => CriterionParts {
                        loglik: misclassification_risk(
                            &predictions(&outputs, arch.output_activation),
                            &val_labels,
                        )?,
                        penalty: 0.0,
                    },
                };
                rows.push(CriterionRow {
                    candidate: ci,
                    hidden_widths: cand.hidden_widths.clone(),
                    truncations: cand.basis.truncations(),
                    lambda: ck.lambda,
                    p0: ck.p0,
                    loglik: parts.loglik,
                    penalty: parts.penalty,
                    criterion: parts.total(),
                    selected: ck.selected.clone(),
                });
            }
            Ok(CandidateEval {
                index: ci,
                rows,
                checkpoints: outcome.checkpoints,
                arch,
                diverged_empty: outcome.diverged,
            })
        })
        .collect();

    let mut table = Vec::new();
    let mut diverged_candidates = Vec::new();
    let mut best: Option<(usize, usize)> = None; // (candidate index, checkpoint index)
    let mut best_key = (f64::INFINITY, usize::MAX, f64::INFINITY);
    let mut evals_ok: Vec<CandidateEval> = Vec::new();
    let mut failures = Vec::new();
    for ev in evals {
        match ev {
            Ok(ev) => {
                if ev.checkpoints.is_empty() {
                    diverged_candidates.push(ev.index);
                } else if ev.diverged_empty {
                    diverged_candidates.push(ev.index);
                }
                evals_ok.push(ev);
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Selection(format!(
            "{} candidate(s) failed: {}",
            failures.len(),
            failures.join("; ")
        )));
    }
    for ev in &evals_ok {
        for (ki, row) in ev.rows.iter().enumerate() {
            table.push(row.clone());
            if !row.criterion.is_finite() {
                continue;
            }
            let key = (row.criterion, row.p0, row.lambda);
            if key < best_key {
                best_key = key;
                best = Some((ev.index, ki));
            }
        }
    }

    let (best_ci, best_ki) = best.ok_or_else(|| {
        Error::Selection(format!(
            "no usable checkpoint: {} of {} candidates diverged",
            diverged_candidates.len(),
            candidates.len()
        ))
    })?;
    let ev = evals_ok
        .iter()
        .find(|e| e.index == best_ci)
        .expect("winning candidate present");
    let ck = &ev.checkpoints[best_ki];
    let row = &ev.rows[best_ki];

    Ok(SelectionResult {
        candidate: candidates[best_ci].clone(),
        candidate_index: best_ci,
        architecture: ev.arch.clone(),
        params: ck.params.clone(),
        lambda: ck.lambda,
        p0: ck.p0,
        selected: ck.selected.clone(),
        criterion,
        criterion_value: row.criterion,
        loglik: row.loglik,
        penalty: row.penalty,
        table,
        split,
        forced_mr,
        diverged_candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn fbic_matches_formula() {
        // likelihood term 10.0 comes from 10 samples each at prob e^-1
        let probs = Array2::from_elem((10, 2), (-1.0f64).exp());
        let labels = vec![1; 10];
        let parts = fbic(probs.view(), &labels, 5, 50, 300, 0).unwrap();
        assert!((parts.loglik - 10.0).abs() < 1e-12);
        let expected_pen = 3.0 * 5.0 * 50f64.ln() / 300.0;
        assert!((parts.penalty - expected_pen).abs() < 1e-12);
        assert!((parts.total() - 10.195601).abs() < 1e-5);
    }

    #[test]
    fn fbic_zero_p0_is_pure_loglik() {
        let probs = array![[0.5, 0.5], [0.25, 0.75]];
        let labels = vec![1, 2];
        let parts = fbic(probs.view(), &labels, 0, 50, 300, 0).unwrap();
        assert_eq!(parts.penalty, 0.0);
        assert!((parts.total() - (2f64.ln() + 0.75f64.ln().abs())).abs() < 1e-12);
    }

    #[test]
    fn fbic_tau_scales_penalty_tenfold() {
        let probs = Array2::from_elem((4, 3), 1.0 / 3.0);
        let labels = vec![1, 2, 3, 1];
        let a = fbic(probs.view(), &labels, 4, 20, 100, 0).unwrap();
        let b = fbic(probs.view(), &labels, 4, 20, 100, 1).unwrap();
        assert!((b.penalty - 10.0 * a.penalty).abs() < 1e-12);
        assert_eq!(a.loglik, b.loglik);
    }

    #[test]
    fn fbic_floors_probabilities() {
        let probs = array![[0.0, 1.0]];
        let labels = vec![1];
        let parts = fbic(probs.view(), &labels, 0, 2, 10, 0).unwrap();
        assert!(parts.loglik.is_finite());
        assert!((parts.loglik - (-PROB_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn fbic_rejects_empty_validation() {
        let probs = Array2::<f64>::zeros((0, 2));
        assert!(fbic(probs.view(), &[], 0, 2, 10, 0).is_err());
    }

    #[test]
    fn mr_examples() {
        assert_eq!(
            misclassification_risk(&[1, 2, 2], &[1, 2, 3]).unwrap(),
            1.0 / 3.0
        );
        assert_eq!(misclassification_risk(&[1, 2], &[1, 2]).unwrap(), 0.0);
        assert_eq!(misclassification_risk(&[2, 1], &[1, 2]).unwrap(), 1.0);
        assert!(misclassification_risk(&[], &[]).is_err());
    }

    #[test]
    fn empty_grid_rejected() {
        use crate::funcdata::{FunctionalSample, GridSpec};
        let grid = GridSpec::unit(vec![4]).unwrap();
        let samples: Vec<FunctionalSample> = (0..6)
            .map(|i| FunctionalSample::new(vec![vec![i as f64; 4]]))
            .collect();
        let labels = vec![1, 1, 1, 2, 2, 2];
        let ds = FunctionalDataset::new(samples, labels, vec![grid], 2).unwrap();
        let err = select_model(
            &ds,
            &[],
            &RunConfig::default(),
            Criterion::Fbic,
            LossKind::CrossEntropy,
            1,
        );
        assert!(err.is_err());
    }
}
