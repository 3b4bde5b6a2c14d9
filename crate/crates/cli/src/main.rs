//! Command-line front end: dataset simulation, path training, model
//! selection, evaluation, and the replicate harness.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use funclass::config::RunConfig;
use funclass::evaluation::{accuracy, run_replicates, MetricsReport};
use funclass::funcdata::{load_dataset, project_dataset, save_dataset};
use funclass::lassonet::train_path;
use funclass::network::{
    forward_batch, load_model, predict_label, save_model, LossKind, Mode,
};
use funclass::selection::{architecture_for, candidate_grid, select_model, CandidateSpec, Criterion};
use funclass::simgen::{gen_model, ModelId, SimDesign};
use funclass::Error;

#[derive(Parser)]
#[command(
    name = "funclass",
    about = "Multi-class classification and feature selection for functional data"
)]
struct Cli {
    /// Base RNG seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Key = value configuration file overriding the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Fbic,
    Mr,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Criterion {
        match c {
            CriterionArg::Fbic => Criterion::Fbic,
            CriterionArg::Mr => Criterion::Mr,
        }
    }
}

#[derive(Args)]
struct DesignArgs {
    /// Simulation design id: I..VI.
    #[arg(long)]
    model: String,
    /// Samples per class.
    #[arg(long, default_value_t = 100)]
    n_per_class: usize,
    /// Total feature count.
    #[arg(long, default_value_t = 50)]
    p: usize,
    /// Points per axis of the 2D grids.
    #[arg(long, default_value_t = 30)]
    grid_2d: usize,
    /// Points of the 1D grids (mixed designs).
    #[arg(long, default_value_t = 15)]
    grid_1d: usize,
    /// Pointwise noise standard deviation.
    #[arg(long, default_value_t = 0.1)]
    noise_sd: f64,
}

impl DesignArgs {
    fn design(&self, seed: u64) -> Result<SimDesign, Error> {
        Ok(SimDesign {
            model: ModelId::parse(&self.model)?,
            n_per_class: self.n_per_class,
            p: self.p,
            grid_2d: self.grid_2d,
            grid_1d: self.grid_1d,
            noise_sd: self.noise_sd,
            seed,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a simulated dataset directory plus a design.json echo.
    Simulate {
        #[command(flatten)]
        design: DesignArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one regularization path on a dataset; writes the path log and
    /// per-checkpoint models.
    Train {
        /// Dataset directory.
        #[arg(long)]
        data: PathBuf,
        /// Hidden widths, comma separated (e.g. "100" or "100,100").
        #[arg(long, default_value = "100")]
        widths: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Select a model over the configured candidate grid.
    Select {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = CriterionArg::Fbic)]
        criterion: CriterionArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a saved model on a dataset.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Optional metrics JSON output path (stdout summary otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run R independent replicates of a design and aggregate the metrics.
    Replicate {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long, default_value_t = 10)]
        replicates: usize,
        #[arg(long, value_enum, default_value_t = CriterionArg::Fbic)]
        criterion: CriterionArg,
        /// Output directory for report.csv and report.json.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|&j| j + 1).collect()
}

fn join<T: std::fmt::Display>(items: &[T], sep: &str) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

fn write_report_files(report: &MetricsReport, out: &std::path::Path) -> Result<(), Error> {
    std::fs::create_dir_all(out)?;
    let mut csv = String::from(
        "replicate,seed,emr,fp,accuracy,candidate,hidden_widths,lambda,p0,selected\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.replicate,
            r.seed,
            r.emr,
            r.fp,
            r.accuracy,
            r.candidate_index,
            join(&r.hidden_widths, ";"),
            r.lambda,
            r.p0,
            join(&one_based(&r.selected), ";"),
        );
    }
    if let Some(a) = &report.aggregate {
        let _ = writeln!(
            csv,
            "mean,,{},{},{},,,,,",
            a.mean_emr, a.mean_fp, a.mean_accuracy
        );
    }
    std::fs::write(out.join("report.csv"), csv)?;
    std::fs::write(
        out.join("report.json"),
        serde_json::to_string_pretty(report).map_err(Error::from)?,
    )?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Simulate { design, out } => {
            let design = design.design(cli.seed)?;
            let dataset = gen_model(&design)?;
            save_dataset(&dataset, out)?;
            std::fs::write(
                out.join("design.json"),
                serde_json::to_string_pretty(&design).map_err(Error::from)?,
            )?;
            println!(
                "wrote {} samples x {} features to {}",
                dataset.len(),
                dataset.n_features(),
                out.display()
            );
        }
        Command::Train { data, widths, out } => {
            let dataset = load_dataset(data)?;
            let hidden: Vec<usize> = widths
                .split(',')
                .map(|w| {
                    w.trim()
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad width '{w}'")))
                })
                .collect::<Result<_, _>>()?;
            let grid = candidate_grid(&dataset, &cfg)?;
            let cand = CandidateSpec {
                hidden_widths: hidden,
                basis: grid[0].basis.clone(),
            };
            let arch = architecture_for(&cand, dataset.k(), LossKind::CrossEntropy, cfg.dropout);
            let scores = project_dataset(&dataset, &cand.basis)?;
            let outcome = train_path(
                scores.view(),
                dataset.labels(),
                &arch,
                &cfg.prox(),
                &cfg.path(LossKind::CrossEntropy),
                cli.seed,
            )?;
            std::fs::create_dir_all(out)?;
            let ckpt_dir = out.join("checkpoints");
            std::fs::create_dir_all(&ckpt_dir)?;
            let mut csv = String::from("checkpoint,lambda,p0,train_loss,selected\n");
            for (i, ck) in outcome.checkpoints.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    i,
                    ck.lambda,
                    ck.p0,
                    ck.train_loss,
                    join(&one_based(&ck.selected), ";")
                );
                save_model(
                    &ckpt_dir.join(format!("ckpt_{i:04}.json")),
                    &arch,
                    &cand.basis,
                    &ck.params,
                )?;
            }
            std::fs::write(out.join("path_log.csv"), csv)?;
            if outcome.diverged {
                eprintln!(
                    "warning: path diverged; kept {} checkpoint(s)",
                    outcome.checkpoints.len()
                );
            }
            println!(
                "path finished with {} checkpoint(s) in {}",
                outcome.checkpoints.len(),
                out.display()
            );
        }
        Command::Select {
            data,
            criterion,
            out,
        } => {
            let dataset = load_dataset(data)?;
            let candidates = candidate_grid(&dataset, &cfg)?;
            let sel = select_model(
                &dataset,
                &candidates,
                &cfg,
                (*criterion).into(),
                LossKind::CrossEntropy,
                cli.seed,
            )?;
            std::fs::create_dir_all(out)?;
            let mut csv = String::from(
                "candidate,hidden_widths,truncations,lambda,p0,loglik,penalty,criterion,selected\n",
            );
            for row in &sel.table {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{}",
                    row.candidate,
                    join(&row.hidden_widths, ";"),
                    join(&row.truncations, ";"),
                    row.lambda,
                    row.p0,
                    row.loglik,
                    row.penalty,
                    row.criterion,
                    join(&one_based(&row.selected), ";")
                );
            }
            std::fs::write(out.join("criterion_table.csv"), csv)?;
            save_model(
                &out.join("model.json"),
                &sel.architecture,
                &sel.candidate.basis,
                &sel.params,
            )?;
            let summary = serde_json::json!({
                "criterion": sel.criterion,
                "criterion_value": sel.criterion_value,
                "loglik": sel.loglik,
                "penalty": sel.penalty,
                "candidate_index": sel.candidate_index,
                "hidden_widths": sel.candidate.hidden_widths,
                "lambda": sel.lambda,
                "p0": sel.p0,
                "selected_features": one_based(&sel.selected),
                "forced_mr": sel.forced_mr,
                "diverged_candidates": sel.diverged_candidates,
                "split": sel.split,
            });
            std::fs::write(
                out.join("selection.json"),
                serde_json::to_string_pretty(&summary).map_err(Error::from)?,
            )?;
            println!(
                "selected candidate {} (lambda {:.6}, p0 {}), features {:?}",
                sel.candidate_index,
                sel.lambda,
                sel.p0,
                one_based(&sel.selected)
            );
        }
        Command::Evaluate { model, data, out } => {
            let (arch, basis, params) = load_model(model)?;
            let dataset = load_dataset(data)?;
            let scores = project_dataset(&dataset, &basis)?;
            let outputs = forward_batch(&params, &arch, scores.view(), Mode::Eval)?;
            let preds: Vec<usize> = (0..outputs.nrows())
                .map(|i| predict_label(outputs.row(i), arch.output_activation))
                .collect();
            let acc = accuracy(&preds, dataset.labels())?;
            let selected = one_based(&params.selected_features(&arch));
            let summary = serde_json::json!({
                "accuracy": acc,
                "n_samples": dataset.len(),
                "selected_features": selected,
            });
            let text = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
        }
        Command::Replicate {
            design,
            replicates,
            criterion,
            out,
        } => {
            let design = design.design(cli.seed)?;
            let report = run_replicates(&design, &cfg, (*criterion).into(), *replicates, cli.workers)?;
            write_report_files(&report, out)?;
            if let Some(a) = &report.aggregate {
                println!(
                    "{} replicate(s), {} failure(s): mean EMR {:.3}, mean FP {:.3}, mean accuracy {:.3}",
                    report.rows.len(),
                    report.failures.len(),
                    a.mean_emr,
                    a.mean_fp,
                    a.mean_accuracy
                );
            } else {
                eprintln!("all {} replicate(s) failed", report.failures.len());
            }
        }
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Numerical(_) | Error::Selection(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
