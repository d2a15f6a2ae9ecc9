use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;
use serde_json::Value;

pub const EXIT_VERIFICATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_IO: u8 = 4;

/// A failure carrying the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_USAGE,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn io(context: impl fmt::Display, err: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_IO,
            error: err.into().context(context.to_string()),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl From<graphden::Error> for CliError {
    fn from(err: graphden::Error) -> Self {
        use graphden::Error as E;
        let code = match &err {
            E::Io { .. } | E::Parse { .. } | E::MissingFile(_) | E::InvalidDataset(_) | E::Json(_) => EXIT_IO,
            E::EmptyGraph | E::EndpointOutOfRange { .. } => EXIT_IO,
            E::SolverDiverged { .. } | E::NonFiniteLoss { .. } | E::DegenerateNode { .. } | E::Autodiff(_) => {
                EXIT_NUMERICAL
            }
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            error: err.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Machine-readable summary printed by every command.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub status: &'static str,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes the report to stdout; a closed pipe is not an error.
    pub fn emit(&self) {
        emit(&self.to_json());
    }
}

pub fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}").and_then(|_| out.flush());
}

pub fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

/// Renders rows as CSV with a header line.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
