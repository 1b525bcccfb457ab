//! Experiment runner behind the `anderloc` binary: TOML experiment specs in,
//! versioned CSV tables and provenance-carrying JSON reports out.

pub mod experiments;
pub mod output;
pub mod spec;

use std::fmt;

use serde::Serialize;

pub use experiments::{execute, plan, Outcome, Plan};
pub use output::{write_outputs, Table, JSON_SCHEMA_VERSION};
pub use spec::{ExperimentSpec, Kind, Overrides};

/// Failure classes, each with its own process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorClass {
    Io,
    Parse,
    Numerical,
    Hypothesis,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Io => 1,
            ErrorClass::Parse => 2,
            ErrorClass::Numerical => 3,
            ErrorClass::Hypothesis => 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CliError {
    #[serde(rename = "error_class")]
    pub class: ErrorClass,
    pub message: String,
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Parse, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Io, message: message.into() }
    }

    /// One-line JSON record for standard error.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error record serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.class, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<anderloc::Error> for CliError {
    fn from(e: anderloc::Error) -> Self {
        use anderloc::Error as E;
        let class = match &e {
            E::HypothesisViolation(_) => ErrorClass::Hypothesis,
            E::InsufficientData(_) => ErrorClass::Numerical,
            e if e.is_numerical() => ErrorClass::Numerical,
            _ => ErrorClass::Parse,
        };
        Self { class, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Rayon pool with `threads` workers (`0` picks the rayon default).
pub fn thread_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::io(e.to_string()))
}

/// Paths and verdict of a finished run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub csv: std::path::PathBuf,
    pub json: std::path::PathBuf,
    pub verdict: Option<bool>,
    pub summary: String,
}

/// Plans, runs and writes one experiment on a pool of `threads` workers.
/// A negative verdict still writes both files.
pub fn run(spec: &ExperimentSpec, threads: usize) -> CliResult<RunReport> {
    let plan = experiments::plan(spec)?;
    let outcome = thread_pool(threads)?.install(|| experiments::execute(spec, &plan))?;
    let (csv, json) = output::write_outputs(spec, &outcome.table, &outcome.result, outcome.verdict)?;
    Ok(RunReport { csv, json, verdict: outcome.verdict, summary: outcome.summary })
}
