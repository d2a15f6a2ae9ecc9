use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::Args;
use graphden::denoise::{
    adaptive_gd_step, closed_form_denoise, degree_normalized_adaptive_denoise, generic_gd_denoise, gd_denoise,
    objective, DenoiseConfig, DenoiseResult, RegularizerSpec, StepSize,
};
use graphden::io::{load_dataset, load_signal, save_signal};
use graphden::{Graph, LaplacianKind, Signal};
use serde_json::json;

use crate::regspec::parse_regularizer;
use crate::report::{csv, to_value, write_text, CliError, CliResult, RunReport, Timings};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepArg {
    /// `1/(2+2c)` for global sym-normalized regularization.
    Theorem,
    /// Per-node stepsizes of the adaptive solvers.
    Adaptive,
    /// `1/L` from a Hessian bound of the objective.
    Auto,
    Fixed(f64),
}

impl FromStr for StepArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "theorem" => Ok(StepArg::Theorem),
            "adaptive" => Ok(StepArg::Adaptive),
            "auto" => Ok(StepArg::Auto),
            _ => s
                .parse::<f64>()
                .map(StepArg::Fixed)
                .map_err(|_| format!("expected theorem, adaptive, auto or a number, got `{s}`")),
        }
    }
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Noisy signal `S` (header `N<TAB>d`, then rows).
    #[arg(long)]
    pub signal: PathBuf,
    /// Dataset directory providing the graph.
    #[arg(long)]
    pub data: PathBuf,
    /// Regularizer, e.g. `global:c=9`, `global:c=1,kind=unnormalized`,
    /// `node:c=1`, `degnorm:file=c.txt`, `pairnorm:cp=1,cn=0.01`,
    /// `dropedge:q=0.2,seed=3`, `trend:c=1`.
    #[arg(long)]
    pub reg: String,
    /// Gradient steps; without it the closed form is used (global only).
    #[arg(long)]
    pub steps: Option<usize>,
    /// theorem | adaptive | auto | <b>
    #[arg(long)]
    pub stepsize: Option<StepArg>,
    /// Output signal `F`.
    #[arg(long)]
    pub out: PathBuf,
    /// Objective trace CSV; defaults to `<out stem>_trace.csv`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Only evaluate the objective of this signal against `--signal`.
    #[arg(long)]
    pub evaluate: Option<PathBuf>,
}

fn trace_path(out: &Path, trace: &Option<PathBuf>) -> PathBuf {
    trace.clone().unwrap_or_else(|| {
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.with_file_name(format!("{stem}_trace.csv"))
    })
}

fn solve(
    s: &Signal,
    reg: &RegularizerSpec,
    steps: Option<usize>,
    stepsize: Option<StepArg>,
    graph: &Graph,
) -> CliResult<(DenoiseResult, &'static str)> {
    let sv = s.view();
    let Some(k) = steps else {
        return match reg {
            RegularizerSpec::GlobalLaplacian { c, kind } => {
                let f = closed_form_denoise(sv, *c, graph, *kind)?;
                let trace = vec![objective(sv, sv, reg, graph)?, objective(f.view(), sv, reg, graph)?];
                Ok((
                    DenoiseResult {
                        signal: f,
                        objective_trace: trace,
                    },
                    "closed-form",
                ))
            }
            RegularizerSpec::TrendFilter { .. } => Err(graphden::Error::UnsupportedSolver("trend-filter").into()),
            _ => Err(CliError::usage(format!(
                "the {} regularizer has no closed form; pass --steps",
                reg.name()
            ))),
        };
    };
    let auto = |reg: &RegularizerSpec| -> CliResult<f64> { Ok(1.0 / reg.smoothness_bound(graph)?) };
    let generic = |b: f64| -> CliResult<DenoiseResult> { Ok(generic_gd_denoise(sv, reg, k, b, graph)?) };
    match (reg, stepsize) {
        (RegularizerSpec::TrendFilter { .. }, _) => Err(graphden::Error::UnsupportedSolver("trend-filter").into()),
        (RegularizerSpec::GlobalLaplacian { c, kind }, step) if *kind == LaplacianKind::SymNormalizedSelfLoop => {
            let stepsize = match step {
                None | Some(StepArg::Theorem) => StepSize::Theorem,
                Some(StepArg::Fixed(b)) => StepSize::Fixed { b },
                Some(StepArg::Auto) => StepSize::Fixed { b: auto(reg)? },
                Some(StepArg::Adaptive) => return Err(CliError::usage("global regularization has no adaptive stepsize")),
            };
            let solver = if stepsize == StepSize::Theorem { "gd-theorem" } else { "gd-fixed" };
            Ok((gd_denoise(sv, *c, &DenoiseConfig { steps: k, stepsize }, graph)?, solver))
        }
        (RegularizerSpec::NodeAdaptive { c }, Some(StepArg::Adaptive)) => {
            if k != 1 {
                return Err(CliError::usage("the adaptive one-step update takes --steps 1"));
            }
            let f = adaptive_gd_step(sv, c, graph)?;
            let trace = vec![objective(sv, sv, reg, graph)?, objective(f.view(), sv, reg, graph)?];
            Ok((
                DenoiseResult {
                    signal: f,
                    objective_trace: trace,
                },
                "adaptive-step",
            ))
        }
        (RegularizerSpec::DegreeNormalizedAdaptive { c }, None | Some(StepArg::Adaptive)) => {
            Ok((degree_normalized_adaptive_denoise(sv, c, k, graph)?, "adaptive-iteration"))
        }
        (RegularizerSpec::DegreeNormalizedAdaptive { .. }, _) => {
            Err(CliError::usage("degnorm uses per-node adaptive stepsizes; omit --stepsize"))
        }
        (_, None | Some(StepArg::Auto)) => Ok((generic(auto(reg)?)?, "gd-auto")),
        (_, Some(StepArg::Fixed(b))) => Ok((generic(b)?, "gd-fixed")),
        (_, Some(other)) => Err(CliError::usage(format!("stepsize {other:?} does not apply to {}", reg.name()))),
    }
}

pub fn run(args: DenoiseArgs) -> CliResult<ExitCode> {
    let start = Instant::now();
    let data = load_dataset(&args.data)?;
    let graph = &data.graph;
    let s = load_signal(&args.signal)?;
    if s.nrows() != graph.num_nodes() {
        return Err(CliError::usage(format!(
            "signal has {} rows, graph has {} nodes",
            s.nrows(),
            graph.num_nodes()
        )));
    }
    let reg = parse_regularizer(&args.reg, graph.num_nodes()).map_err(CliError::usage)?;
    let trace_file = trace_path(&args.out, &args.trace);
    let config = json!({
        "signal": args.signal,
        "data": args.data,
        "reg": to_value(&reg),
        "steps": args.steps,
        "stepsize": args.stepsize.map(|s| format!("{s:?}")),
        "out": args.out,
        "trace": trace_file,
        "evaluate": args.evaluate,
    });

    let (result, solver) = match &args.evaluate {
        Some(path) => {
            let f = load_signal(path)?;
            let value = objective(f.view(), s.view(), &reg, graph)?;
            (
                DenoiseResult {
                    signal: f,
                    objective_trace: vec![value],
                },
                "evaluate",
            )
        }
        None => solve(&s, &reg, args.steps, args.stepsize, graph)?,
    };
    if args.evaluate.is_none() {
        save_signal(&args.out, &result.signal)?;
    }
    let rows = result
        .objective_trace
        .iter()
        .enumerate()
        .map(|(k, v)| vec![k.to_string(), format!("{v:.17e}")]);
    write_text(&trace_file, &csv(&["step", "objective"], rows))?;

    let trace = &result.objective_trace;
    let report = RunReport {
        command: "denoise",
        config,
        seed: None,
        status: "ok",
        result: json!({
            "solver": solver,
            "initial_objective": trace.first(),
            "final_objective": trace.last(),
            "nonincreasing": trace.windows(2).all(|w| w[1] <= w[0]),
        }),
        timings: Some(Timings {
            total_seconds: start.elapsed().as_secs_f64(),
        }),
    };
    report.emit();
    Ok(ExitCode::SUCCESS)
}
