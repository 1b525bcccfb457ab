use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::spec::ExperimentSpec;
use crate::{CliError, CliResult};

/// Version of the JSON report layout.
pub const JSON_SCHEMA_VERSION: u32 = 1;

/// A CSV table tagged with its schema id (`name/version`).
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub schema: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &'static str, columns: &[&'static str]) -> Self {
        Self { schema, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// `# anderloc-csv schema=<id>` line, header, rows.
    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut buf = format!("# anderloc-csv schema={}\n", self.schema).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let err = |e: csv::Error| CliError::io(e.to_string());
            w.write_record(&self.columns).map_err(err)?;
            for r in &self.rows {
                w.write_record(r).map_err(err)?;
            }
            w.flush()?;
        }
        Ok(buf)
    }
}

/// Shortest round-trip decimal, switching to exponent form for very large
/// or very small magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes `<base>.csv` and `<base>.json`; returns both paths.
pub fn write_outputs(
    spec: &ExperimentSpec,
    table: &Table,
    result: &Value,
    verdict: Option<bool>,
) -> CliResult<(PathBuf, PathBuf)> {
    let base = spec.output_base();
    if let Some(dir) = base.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let csv_path = with_ext(&base, "csv");
    let json_path = with_ext(&base, "json");
    std::fs::write(&csv_path, table.to_csv()?)?;
    let report = json!({
        "schema_version": JSON_SCHEMA_VERSION,
        "csv_schema": table.schema,
        "kind": spec.kind().name(),
        "code_version": env!("CARGO_PKG_VERSION"),
        "config_hash": spec.config_hash(),
        "seed": spec.experiment.seed,
        "realizations": spec.experiment.realizations,
        "csv": csv_path.file_name().map(|f| f.to_string_lossy().into_owned()),
        "verdict": verdict,
        "spec": spec.effective_toml(),
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::io(e.to_string()))?;
    text.push('\n');
    std::fs::write(&json_path, text)?;
    Ok((csv_path, json_path))
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}
