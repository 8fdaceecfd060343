//! The JSON envelope shared by every subcommand, and output plumbing.
//!
//! Everything except `timing` is a pure function of the configuration and
//! the input bytes, so two runs differ only inside that key.

use std::io::Write;
use std::time::Instant;

use icclab::curvature::io::LoadReport;
use serde::Serialize;

use crate::config::RunConfig;
use crate::{CliError, Format, Status};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct InputInfo {
    pub path: String,
    /// SHA-256 of `"blob <len>\0" ++ bytes`.
    pub content_hash: String,
    pub load: LoadReport,
}

#[derive(Debug, Serialize)]
pub struct Outcome {
    pub exit_code: u8,
    pub messages: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub report_version: u32,
    pub command: &'static str,
    pub tool_version: &'static str,
    pub config: &'a RunConfig,
    pub seed: u64,
    pub input: Option<InputInfo>,
    pub outcome: Outcome,
    pub result: T,
    pub timing: Timing,
}

pub struct Emitter<'a> {
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub format: Format,
    pub started: Instant,
}

impl<'a> Emitter<'a> {
    pub fn new(command: &'static str, config: &'a RunConfig, format: Format) -> Self {
        Self {
            command,
            config,
            format,
            started: Instant::now(),
        }
    }

    fn outcome(status: Status, messages: Vec<String>) -> Outcome {
        Outcome {
            exit_code: status as u8,
            messages,
        }
    }

    /// Writes the report in the selected format. `csv` renders the CSV body
    /// when that format is chosen.
    pub fn emit<T: Serialize>(
        &self,
        input: Option<InputInfo>,
        status: Status,
        messages: Vec<String>,
        result: &T,
        csv: impl FnOnce() -> String,
    ) -> Result<Status, CliError> {
        let text = match self.format {
            Format::Json => {
                let report = Report {
                    report_version: REPORT_VERSION,
                    command: self.command,
                    tool_version: env!("CARGO_PKG_VERSION"),
                    config: self.config,
                    seed: self.config.seed,
                    input,
                    outcome: Self::outcome(status, messages),
                    result,
                    timing: Timing {
                        wall_seconds: self.started.elapsed().as_secs_f64(),
                    },
                };
                let mut s = serde_json::to_string_pretty(&report).expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Csv => self.csv_with_header(input.as_ref(), status, &messages, csv()),
        };
        write_output(self.config.output.as_deref(), &text)?;
        Ok(status)
    }

    /// CSV with `#`-prefixed provenance lines before the header row and the
    /// wall time as the last line.
    fn csv_with_header(&self, input: Option<&InputInfo>, status: Status, messages: &[String], body: String) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# icclab {} {} seed={} exit_code={}\n",
            self.command,
            env!("CARGO_PKG_VERSION"),
            self.config.seed,
            status as u8
        ));
        if let Some(inp) = input {
            out.push_str(&format!("# input={} content_hash={}\n", inp.path, inp.content_hash));
        }
        out.push_str(&format!(
            "# config={}\n",
            serde_json::to_string(self.config).expect("config serializes")
        ));
        for m in messages {
            out.push_str(&format!("# message={m}\n"));
        }
        out.push_str(&body);
        out.push_str(&format!("# wall_seconds={}\n", self.started.elapsed().as_secs_f64()));
        out
    }
}

pub fn write_output(path: Option<&str>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
