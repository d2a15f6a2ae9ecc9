use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Args;
use graphden::graph::local_label_smoothness;
use graphden::io::{load_dataset, perturb_graph, read_edge_list, Dataset, PerturbationMode, PerturbationSpec};
use graphden::Graph;
use serde_json::json;

use crate::report::{csv, to_value, write_text, CliError, CliResult, RunReport, Timings};
use crate::training::{train_grid, ModelArgs};

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Directory of perturbed edge files named `<anything>_<rate>.tsv`; a
    /// rate above 1 is read as a percentage.
    #[arg(long)]
    pub graphs: Option<PathBuf>,
    /// Generate label-flip perturbations at these rates instead of (or in
    /// addition to) `--graphs`.
    #[arg(long, value_delimiter = ',')]
    pub flip_rates: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub flip_seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    /// CSV with one row per perturbation rate.
    #[arg(long)]
    pub out: PathBuf,
}

/// Rate encoded in a file stem such as `meta_0.05` or `attacked_15`.
pub fn rate_from_stem(path: &Path) -> Option<f64> {
    let stem = path.file_stem()?.to_str()?;
    let (_, tail) = stem.rsplit_once('_')?;
    let r: f64 = tail.parse().ok()?;
    let r = if r > 1.0 { r / 100.0 } else { r };
    (0.0..=1.0).contains(&r).then_some(r)
}

struct Case {
    rate: f64,
    source: String,
    graph: Graph,
}

fn collect_cases(args: &RobustnessArgs, data: &Dataset) -> CliResult<Vec<Case>> {
    let mut cases = vec![Case {
        rate: 0.0,
        source: "clean".into(),
        graph: data.graph.clone(),
    }];
    if let Some(dir) = &args.graphs {
        let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(format!("listing {}", dir.display()), e))?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
            .collect();
        files.sort();
        for path in files {
            let rate = rate_from_stem(&path).ok_or_else(|| {
                CliError::usage(format!("cannot read a perturbation rate from {}", path.display()))
            })?;
            let edges = read_edge_list(&path)?;
            let graph = Graph::from_edges(data.num_nodes(), &edges).map_err(|e| {
                CliError::from(e).with_context(format!("{} does not share the dataset's node set", path.display()))
            })?;
            cases.push(Case {
                rate,
                source: path.display().to_string(),
                graph,
            });
        }
    }
    for &rate in &args.flip_rates {
        if rate == 0.0 {
            continue;
        }
        let spec = PerturbationSpec {
            rate,
            mode: PerturbationMode::RandomFlip,
            seed: args.flip_seed,
        };
        cases.push(Case {
            rate,
            source: format!("random_flip(seed={})", args.flip_seed),
            graph: perturb_graph(&data.graph, &spec, Some(&data.labels))?,
        });
    }
    // stable: equal rates keep discovery order
    cases.sort_by(|a, b| a.rate.total_cmp(&b.rate));
    Ok(cases)
}

impl CliError {
    fn with_context(self, context: String) -> Self {
        CliError {
            code: self.code,
            error: self.error.context(context),
        }
    }
}

pub fn run(args: RobustnessArgs) -> CliResult<ExitCode> {
    let start = Instant::now();
    let data = load_dataset(&args.data)?;
    let cases = collect_cases(&args, &data)?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for case in &cases {
        let perturbed = data.with_graph(case.graph.clone())?;
        let grid = train_grid(&args.model, &perturbed)?;
        let m = &grid.outcome.metrics;
        let mean_ls = local_label_smoothness(&perturbed.graph, &perturbed.labels).mean();
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        eprintln!("rate {:.3}: test {:.4} ({})", case.rate, m.test_accuracy, case.source);
        rows.push(vec![
            case.rate.to_string(),
            case.source.clone(),
            m.test_accuracy.to_string(),
            opt(m.grouped.low),
            opt(m.grouped.high),
            opt(m.correlation),
            mean_ls.to_string(),
            perturbed.graph.num_edges().to_string(),
        ]);
        results.push(json!({
            "perturb_rate": case.rate,
            "source": case.source,
            "accuracy": m.test_accuracy,
            "grouped": to_value(&m.grouped),
            "correlation": m.correlation,
            "mean_ls": mean_ls,
            "selected": to_value(&grid.configs[grid.best]),
        }));
    }
    write_text(
        &args.out,
        &csv(
            &["perturb_rate", "source", "accuracy", "low_accuracy", "high_accuracy", "correlation", "mean_ls", "edges"],
            rows,
        ),
    )?;
    let report = RunReport {
        command: "eval-robustness",
        config: json!({
            "data": args.data,
            "graphs": args.graphs,
            "flip_rates": args.flip_rates,
            "flip_seed": args.flip_seed,
            "flags": to_value(&args.model),
            "out": args.out,
        }),
        seed: Some(args.model.seed),
        status: "ok",
        result: json!(results),
        timings: Some(Timings {
            total_seconds: start.elapsed().as_secs_f64(),
        }),
    };
    report.emit();
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_from_file_names() {
        assert_eq!(rate_from_stem(Path::new("g/meta_0.05.tsv")), Some(0.05));
        assert_eq!(rate_from_stem(Path::new("attacked_25.tsv")), Some(0.25));
        assert_eq!(rate_from_stem(Path::new("edges.tsv")), None);
        assert_eq!(rate_from_stem(Path::new("x_abc.tsv")), None);
    }
}
