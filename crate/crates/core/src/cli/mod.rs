//! Command-line front end.
//!
//! Every command produces a JSON report (printed and written to the output
//! directory), optional extra files, and a `manifest.json` describing the run.
//! Exit codes: 0 success, 1 a checked quantity is out of tolerance or a
//! computation failed, 2 bad input or usage.

mod args;
mod commands;
mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;

pub use args::{Cli, GenerateArgs, InstanceKind};
pub use commands::generate_instance;
pub use manifest::RunManifest;

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Result of one command before anything is written.
pub(crate) struct Outcome {
    pub name: String,
    pub report: serde_json::Value,
    /// Extra files `(name, contents)` relative to the output directory.
    pub files: Vec<(String, String)>,
    pub passed: bool,
}

impl Outcome {
    pub fn new(name: &str, report: impl Serialize, passed: bool) -> Result<Self, CliError> {
        Ok(Self {
            name: name.to_string(),
            report: serde_json::to_value(report).map_err(|e| CliError::Failure(e.to_string()))?,
            files: Vec::new(),
            passed,
        })
    }

    pub fn with_file(mut self, name: impl Into<String>, contents: String) -> Self {
        self.files.push((name.into(), contents));
        self
    }
}

#[derive(Debug)]
pub(crate) enum CliError {
    Input(String),
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Failure(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch { .. }
            | Error::InvalidInput(_)
            | Error::StructureViolation { .. }
            | Error::MajorizationFailure { .. }
            | Error::Unbalanced { .. }
            | Error::Degenerate(_)
            | Error::SizeLimit(_)
            | Error::NotRearrangement(_)
            | Error::Cfl { .. }
            | Error::Json(_)
            | Error::Io(_) => CliError::Input(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

/// Records the inputs a command reads so the manifest can list their digests.
#[derive(Default)]
pub(crate) struct Inputs {
    pub digests: Vec<(String, String)>,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        self.digests
            .push((path.display().to_string(), manifest::sha256_hex(&bytes)));
        String::from_utf8(bytes)
            .map_err(|_| CliError::Input(format!("{} is not UTF-8", path.display())))
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(
        &mut self,
        path: &Path,
    ) -> Result<T, CliError> {
        let text = self.read(path)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("invalid JSON in {}: {e}", path.display())))
    }
}

fn to_pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let start = Instant::now();
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut inputs = Inputs::default();
    let outcome = match commands::execute(&cli, &mut inputs) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return e.exit_code();
        }
    };
    match write_outputs(&cli, &argv, &out_dir, &inputs, &outcome, start) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    }
    print!("{}", to_pretty(&outcome.report));
    if outcome.passed {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

fn write_outputs(
    cli: &Cli,
    argv: &[OsString],
    out_dir: &Path,
    inputs: &Inputs,
    outcome: &Outcome,
    start: Instant,
) -> std::io::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let report_name = format!("{}.json", outcome.name);
    std::fs::write(out_dir.join(&report_name), to_pretty(&outcome.report))?;
    let mut outputs = vec![report_name];
    for (name, contents) in &outcome.files {
        std::fs::write(out_dir.join(name), contents)?;
        outputs.push(name.clone());
    }
    let manifest = RunManifest {
        command: argv
            .iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect(),
        seed: cli.seed,
        tol: cli.tol,
        input_digests: inputs.digests.iter().cloned().collect(),
        outputs,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        passed: outcome.passed,
    };
    std::fs::write(out_dir.join("manifest.json"), to_pretty(&manifest))
}
