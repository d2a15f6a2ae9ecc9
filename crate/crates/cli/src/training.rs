use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, ValueEnum};
use graphden::graph::local_label_smoothness;
use graphden::io::{load_dataset, Dataset};
use graphden::learn::{learned_smoothness, save_checkpoint, train, Architecture, Metrics, Optimizer, TrainConfig, TrainOutcome};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::report::{csv, to_value, write_text, CliError, CliResult, RunReport, Timings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Gcn,
    Gat,
    Appnp,
    AdaUgnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerName {
    Gd,
    Momentum,
    Adam,
}

/// Model and optimization flags. Comma-separated values span a grid; the
/// configuration with the best validation accuracy wins.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "gcn")]
    pub model: ModelName,
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    pub lr: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "5e-4")]
    pub wd: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub dropout: Vec<f64>,
    /// Teleport probability (appnp).
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    pub alpha: Vec<f64>,
    /// Propagation steps (appnp, ada-ugnn).
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub k: Vec<usize>,
    /// Upper bound of the smoothness factors (ada-ugnn).
    #[arg(long, value_delimiter = ',', default_value = "9")]
    pub s: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "64")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub patience: usize,
    #[arg(long, value_enum, default_value = "gd")]
    pub optimizer: OptimizerName,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    /// LeakyReLU slope of the attention logits (gat).
    #[arg(long, default_value_t = graphden::aggregate::DEFAULT_LEAKY_SLOPE)]
    pub leaky_slope: f64,
    /// Use raw features instead of row-normalized ones.
    #[arg(long)]
    pub no_row_normalize: bool,
    /// Worker threads for grid points; defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl ModelArgs {
    /// Every grid point, in flag order.
    pub fn configs(&self) -> Vec<TrainConfig> {
        let optimizer = match self.optimizer {
            OptimizerName::Gd => Optimizer::Gd,
            OptimizerName::Momentum => Optimizer::Momentum { beta: self.momentum },
            OptimizerName::Adam => Optimizer::adam(),
        };
        let mut archs = Vec::new();
        match self.model {
            ModelName::Gcn => archs.push(Architecture::Gcn),
            ModelName::Gat => archs.push(Architecture::Gat {
                leaky_slope: self.leaky_slope,
            }),
            ModelName::Appnp => {
                for &alpha in &self.alpha {
                    for &k in &self.k {
                        archs.push(Architecture::Appnp { alpha, k });
                    }
                }
            }
            ModelName::AdaUgnn => {
                for &s in &self.s {
                    for &k in &self.k {
                        archs.push(Architecture::AdaUgnn { s, k });
                    }
                }
            }
        }
        let mut out = Vec::new();
        for &architecture in &archs {
            for &learning_rate in &self.lr {
                for &weight_decay in &self.wd {
                    for &dropout in &self.dropout {
                        for &hidden in &self.hidden {
                            out.push(TrainConfig {
                                architecture,
                                learning_rate,
                                weight_decay,
                                dropout,
                                epochs: self.epochs,
                                patience: self.patience,
                                seed: self.seed,
                                hidden,
                                optimizer,
                                row_normalize: !self.no_row_normalize,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

pub struct GridResult {
    pub configs: Vec<TrainConfig>,
    pub metrics: Vec<Metrics>,
    pub best: usize,
    pub outcome: TrainOutcome,
}

/// Trains every grid point and keeps the best by validation accuracy, then
/// by lower validation loss, then the earlier grid point.
pub fn train_grid(args: &ModelArgs, data: &Dataset) -> CliResult<GridResult> {
    let configs = args.configs();
    if configs.is_empty() {
        return Err(CliError::usage("empty hyperparameter grid"));
    }
    let run_all = || -> Vec<graphden::Result<TrainOutcome>> { configs.par_iter().map(|c| train(c, data)).collect() };
    let results = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };
    let outcomes: Vec<TrainOutcome> = results.into_iter().collect::<graphden::Result<_>>()?;
    let better = |i: usize, b: usize| {
        let (mi, mb) = (&outcomes[i].metrics, &outcomes[b].metrics);
        mi.val_accuracy > mb.val_accuracy || (mi.val_accuracy == mb.val_accuracy && mi.val_loss < mb.val_loss)
    };
    let best = (0..outcomes.len()).fold(0, |b, i| if better(i, b) { i } else { b });
    let metrics = outcomes.iter().map(|o| o.metrics.clone()).collect();
    let outcome = outcomes.into_iter().nth(best).expect("nonempty");
    Ok(GridResult {
        configs,
        metrics,
        best,
        outcome,
    })
}

pub fn grid_csv(grid: &GridResult) -> String {
    let rows = grid.configs.iter().zip(&grid.metrics).map(|(c, m)| {
        let (alpha, k, s) = match c.architecture {
            Architecture::Appnp { alpha, k } => (alpha.to_string(), k.to_string(), String::new()),
            Architecture::AdaUgnn { s, k } => (String::new(), k.to_string(), s.to_string()),
            _ => Default::default(),
        };
        vec![
            c.architecture.name().to_string(),
            c.learning_rate.to_string(),
            c.weight_decay.to_string(),
            c.dropout.to_string(),
            c.hidden.to_string(),
            alpha,
            k,
            s,
            m.val_accuracy.to_string(),
            m.val_loss.to_string(),
            m.test_accuracy.to_string(),
            m.best_epoch.to_string(),
        ]
    });
    csv(
        &["model", "lr", "wd", "dropout", "hidden", "alpha", "k", "s", "val_accuracy", "val_loss", "test_accuracy", "best_epoch"],
        rows,
    )
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory for checkpoint.json, metrics.json and friends.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn write_factors(path: &Path, c: &[f64], data: &Dataset) -> CliResult<()> {
    let ls = local_label_smoothness(&data.graph, &data.labels);
    let rows = c.iter().enumerate().map(|(i, ci)| {
        vec![
            i.to_string(),
            format!("{ci:.17e}"),
            ls.values[i].to_string(),
            data.graph.degree(i).to_string(),
            data.labels[i].to_string(),
        ]
    });
    write_text(path, &csv(&["node_id", "c", "ls", "degree", "label"], rows))
}

pub fn run(args: TrainArgs) -> CliResult<ExitCode> {
    let start = Instant::now();
    let data = load_dataset(&args.data)?;
    let grid = train_grid(&args.model, &data)?;
    let out = &args.out;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(format!("creating {}", out.display()), e))?;
    save_checkpoint(out.join("checkpoint.json"), &grid.outcome.params)?;
    let best_config = &grid.configs[grid.best];
    let metrics_json = json!({
        "config": to_value(best_config),
        "metrics": to_value(&grid.outcome.metrics),
    });
    write_text(&out.join("metrics.json"), &serde_json::to_string_pretty(&metrics_json).expect("json"))?;
    if grid.configs.len() > 1 {
        write_text(&out.join("grid.csv"), &grid_csv(&grid))?;
    }
    if let Some(c) = learned_smoothness(&grid.outcome.params, &data)? {
        write_factors(&out.join("smoothness_factors.csv"), &c, &data)?;
    }
    let m = &grid.outcome.metrics;
    eprintln!(
        "{}: test {:.4} val {:.4} (best epoch {}, {} grid points)",
        best_config.architecture.name(),
        m.test_accuracy,
        m.val_accuracy,
        m.best_epoch,
        grid.configs.len()
    );
    let report = RunReport {
        command: "train",
        config: json!({
            "data": args.data,
            "out": args.out,
            "flags": to_value(&args.model),
            "selected": to_value(best_config),
            "grid_points": grid.configs.len(),
        }),
        seed: Some(args.model.seed),
        status: "ok",
        result: json!({
            "test_accuracy": m.test_accuracy,
            "val_accuracy": m.val_accuracy,
            "train_accuracy": m.train_accuracy,
            "grouped": to_value(&m.grouped),
            "correlation": m.correlation,
            "best_epoch": m.best_epoch,
            "epochs_run": m.epochs_run,
        }),
        timings: Some(Timings {
            total_seconds: start.elapsed().as_secs_f64(),
        }),
    };
    report.emit();
    Ok(ExitCode::SUCCESS)
}
