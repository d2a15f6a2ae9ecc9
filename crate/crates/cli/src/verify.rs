use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, ValueEnum};
use graphden::aggregate::{certify_theorems, CertifyConfig, Fault};

use crate::report::{to_value, write_text, CliResult, RunReport, EXIT_VERIFICATION};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FaultArg {
    WrongGcnStepsize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub max_nodes: usize,
    /// Where to write the JSON report; stdout always gets it too.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Negative control: deliberately break one comparison.
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

pub fn run(args: VerifyArgs) -> CliResult<ExitCode> {
    let config = CertifyConfig {
        seed: args.seed,
        trials: args.trials,
        max_nodes: args.max_nodes,
        fault: args.inject_fault.map(|FaultArg::WrongGcnStepsize| Fault::WrongGcnStepsize),
    };
    let result = certify_theorems(&config)?;
    for check in &result.checks {
        eprintln!(
            "{:?} {:<6} max |dev| {:.3e} (tol {:.0e}, {} trials, {} skipped)",
            check.theorem, check.status, check.max_abs_deviation, check.tolerance, check.trials, check.skipped
        );
    }
    // no timings: reruns with the same seed must be byte-identical
    let report = RunReport {
        command: "verify",
        config: to_value(&config),
        seed: Some(config.seed),
        status: if result.passed { "ok" } else { "failed" },
        result: to_value(&result),
        timings: None,
    };
    let json = report.to_json();
    if let Some(path) = &args.out {
        write_text(path, &json)?;
    }
    crate::report::emit(&json);
    Ok(if result.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFICATION)
    })
}
