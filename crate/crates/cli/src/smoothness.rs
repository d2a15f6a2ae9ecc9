use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Args;
use graphden::graph::{local_label_smoothness, smoothness_histogram};
use graphden::io::load_dataset;
use serde_json::json;

use crate::report::{csv, write_text, CliResult, RunReport, Timings};

#[derive(Debug, Args)]
pub struct SmoothnessArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Per-node CSV: node_id, degree, ls, isolated.
    #[arg(long)]
    pub out: PathBuf,
    /// Histogram CSV; defaults to `<out stem>_histogram.csv` next to `--out`.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
}

pub fn run(args: SmoothnessArgs) -> CliResult<ExitCode> {
    let start = Instant::now();
    if args.bins == 0 {
        return Err(crate::report::CliError::usage("--bins must be positive"));
    }
    let data = load_dataset(&args.data)?;
    let ls = local_label_smoothness(&data.graph, &data.labels);
    let rows = (0..data.num_nodes()).map(|i| {
        vec![
            i.to_string(),
            data.graph.degree(i).to_string(),
            ls.values[i].to_string(),
            ls.isolated[i].to_string(),
        ]
    });
    write_text(&args.out, &csv(&["node_id", "degree", "ls", "isolated"], rows))?;

    let counts = smoothness_histogram(&ls.values, args.bins);
    let width = 1.0 / args.bins as f64;
    let hist_path = args.histogram.clone().unwrap_or_else(|| {
        let stem = args.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        args.out.with_file_name(format!("{stem}_histogram.csv"))
    });
    let hist_rows = counts.iter().enumerate().map(|(b, c)| {
        vec![
            format!("{:.4}", b as f64 * width),
            format!("{:.4}", (b + 1) as f64 * width),
            c.to_string(),
        ]
    });
    write_text(&hist_path, &csv(&["bin_lower", "bin_upper", "count"], hist_rows))?;

    let mode = counts
        .iter()
        .enumerate()
        .fold(0, |best, (b, &c)| if c > counts[best] { b } else { best });
    let report = RunReport {
        command: "smoothness",
        config: json!({
            "data": args.data,
            "out": args.out,
            "histogram": hist_path,
            "bins": args.bins,
        }),
        seed: None,
        status: "ok",
        result: json!({
            "num_nodes": data.num_nodes(),
            "mean_ls": ls.mean(),
            "isolated_nodes": ls.isolated.iter().filter(|&&x| x).count(),
            "histogram": counts,
            "mode_bin": mode,
        }),
        timings: Some(Timings {
            total_seconds: start.elapsed().as_secs_f64(),
        }),
    };
    report.emit();
    Ok(ExitCode::SUCCESS)
}
