//! Selection and classification metrics plus the replicate harness that
//! turns a simulation design into an aggregated report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::funcdata::project_samples;
use crate::network::{forward_batch, LossKind, Mode};
use crate::selection::{candidate_grid, misclassification_risk, select_model, Criterion};
use crate::simgen::{gen_model, SimDesign};

/// Exact-match indicator and false-positive count of a selected feature
/// set against the truth. Both sets hold 0-based indices below `p`.
pub fn emr_fp(selected: &[usize], truth: &[usize], p: usize) -> Result<(u8, usize)> {
    for &j in selected.iter().chain(truth) {
        if j >= p {
            return Err(Error::Invalid(format!("feature index {j} outside 0..{p}")));
        }
    }
    let mut sel: Vec<usize> = selected.to_vec();
    sel.sort_unstable();
    sel.dedup();
    let mut tr: Vec<usize> = truth.to_vec();
    tr.sort_unstable();
    tr.dedup();
    let matched = u8::from(sel == tr);
    let fp = sel.iter().filter(|j| tr.binary_search(j).is_err()).count();
    Ok((matched, fp))
}

/// Fraction of correct predictions.
pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    Ok(1.0 - misclassification_risk(preds, labels)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub seed: u64,
    pub emr: u8,
    pub fp: usize,
    pub accuracy: f64,
    pub candidate_index: usize,
    pub hidden_widths: Vec<usize>,
    pub lambda: f64,
    pub p0: usize,
    /// 0-based selected feature indices.
    pub selected: Vec<usize>,
    /// Wall-clock seconds; excluded from serialized reports so they stay
    /// byte-identical across runs and worker counts.
    #[serde(skip)]
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_emr: f64,
    pub mean_fp: f64,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub design: SimDesign,
    pub criterion: Criterion,
    pub replicates: usize,
    pub rows: Vec<ReplicateRow>,
    /// (replicate index, error message) pairs; excluded from aggregates.
    pub failures: Vec<(usize, String)>,
    /// Means over successful replicates; absent when all failed.
    pub aggregate: Option<Aggregate>,
}

impl MetricsReport {
    fn aggregate_rows(rows: &[ReplicateRow]) -> Option<Aggregate> {
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        Some(Aggregate {
            mean_emr: rows.iter().map(|r| r.emr as f64).sum::<f64>() / n,
            mean_fp: rows.iter().map(|r| r.fp as f64).sum::<f64>() / n,
            mean_accuracy: rows.iter().map(|r| r.accuracy).sum::<f64>() / n,
        })
    }
}

fn run_one(design: &SimDesign, cfg: &RunConfig, criterion: Criterion, r: usize) -> Result<ReplicateRow> {
    let start = std::time::Instant::now();
    let mut d = design.clone();
    d.seed = design.seed.wrapping_add(r as u64);
    let dataset = gen_model(&d)?;
    let candidates = candidate_grid(&dataset, cfg)?;
    let sel = select_model(
        &dataset,
        &candidates,
        cfg,
        criterion,
        LossKind::CrossEntropy,
        d.seed,
    )?;
    let test_scores = project_samples(&dataset, &sel.candidate.basis, &sel.split.test)?;
    let outputs = forward_batch(&sel.params, &sel.architecture, test_scores.view(), Mode::Eval)?;
    let preds: Vec<usize> = (0..outputs.nrows())
        .map(|i| crate::network::predict_label(outputs.row(i), sel.architecture.output_activation))
        .collect();
    let test_labels: Vec<usize> = sel.split.test.iter().map(|&i| dataset.labels()[i]).collect();
    let acc = accuracy(&preds, &test_labels)?;
    let (emr, fp) = emr_fp(&sel.selected, &design.truth(), dataset.n_features())?;
    Ok(ReplicateRow {
        replicate: r,
        seed: d.seed,
        emr,
        fp,
        accuracy: acc,
        candidate_index: sel.candidate_index,
        hidden_widths: sel.candidate.hidden_widths.clone(),
        lambda: sel.lambda,
        p0: sel.p0,
        selected: sel.selected,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Run `replicates` independent replications of a design (replicate r uses
/// seed `design.seed + r`), collecting selection and test metrics. The
/// report content is independent of `workers`.
pub fn run_replicates(
    design: &SimDesign,
    cfg: &RunConfig,
    criterion: Criterion,
    replicates: usize,
    workers: usize,
) -> Result<MetricsReport> {
    if replicates == 0 {
        return Err(Error::Invalid("need at least 1 replicate".into()));
    }
    design.validate()?;
    cfg.validate()?;

    let run_all = || -> Vec<(usize, Result<ReplicateRow>)> {
        (0..replicates)
            .into_par_iter()
            .map(|r| (r, run_one(design, cfg, criterion, r)))
            .collect()
    };
    let results = if workers == 0 {
        run_all()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Invalid(format!("cannot build worker pool: {e}")))?;
        pool.install(run_all)
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut sorted = results;
    sorted.sort_by_key(|(r, _)| *r);
    for (r, res) in sorted {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    let aggregate = MetricsReport::aggregate_rows(&rows);
    Ok(MetricsReport {
        design: design.clone(),
        criterion,
        replicates,
        rows,
        failures,
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emr_fp_examples() {
        assert_eq!(emr_fp(&[0, 1, 2, 3, 4], &[0, 1, 2, 3, 4], 50).unwrap(), (1, 0));
        assert_eq!(emr_fp(&[0, 1, 2, 3, 4, 6], &[0, 1, 2, 3, 4], 50).unwrap(), (0, 1));
        assert_eq!(emr_fp(&[], &[0, 1], 10).unwrap(), (0, 0));
        assert_eq!(emr_fp(&[5, 6], &[0, 1], 10).unwrap(), (0, 2));
        assert!(emr_fp(&[10], &[0], 10).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert!((accuracy(&[1, 1, 1], &[1, 2, 3]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn aggregate_is_mean_of_rows() {
        let rows = vec![
            ReplicateRow {
                replicate: 0,
                seed: 0,
                emr: 1,
                fp: 0,
                accuracy: 0.9,
                candidate_index: 0,
                hidden_widths: vec![8],
                lambda: 1.0,
                p0: 5,
                selected: vec![0],
                runtime_secs: 0.0,
            },
            ReplicateRow {
                replicate: 1,
                seed: 1,
                emr: 0,
                fp: 2,
                accuracy: 0.7,
                candidate_index: 0,
                hidden_widths: vec![8],
                lambda: 1.0,
                p0: 5,
                selected: vec![0],
                runtime_secs: 0.0,
            },
        ];
        let agg = MetricsReport::aggregate_rows(&rows).unwrap();
        assert_eq!(agg.mean_emr, 0.5);
        assert_eq!(agg.mean_fp, 1.0);
        assert!((agg.mean_accuracy - 0.8).abs() < 1e-15);
    }

    #[test]
    fn empty_rows_have_no_aggregate() {
        assert!(MetricsReport::aggregate_rows(&[]).is_none());
    }
}
