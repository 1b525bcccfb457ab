use std::path::{Path, PathBuf};

use anderloc::ModelConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Spectrum,
    Fracmom,
    BsScan,
    Correlator,
    Wegner,
    Lifshitz,
    Dynamical,
    RescaleCheck,
    Iterate,
    Schedule,
    InitialCheck,
    Subadd,
    CtCheck,
    Oracle,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Spectrum => "spectrum",
            Kind::Fracmom => "fracmom",
            Kind::BsScan => "bs-scan",
            Kind::Correlator => "correlator",
            Kind::Wegner => "wegner",
            Kind::Lifshitz => "lifshitz",
            Kind::Dynamical => "dynamical",
            Kind::RescaleCheck => "rescale-check",
            Kind::Iterate => "iterate",
            Kind::Schedule => "schedule",
            Kind::InitialCheck => "initial-check",
            Kind::Subadd => "subadd",
            Kind::CtCheck => "ct-check",
            Kind::Oracle => "oracle",
        }
    }

    /// Kinds that cannot run without a model configuration.
    pub fn needs_model(self) -> bool {
        !matches!(self, Kind::Iterate | Kind::Schedule | Kind::Oracle)
    }
}

fn one() -> usize {
    1
}

/// The `[experiment]` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: Kind,
    #[serde(default = "one")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    /// Output path without extension, relative to the spec file.
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Model configuration file, used when the spec has no inline model tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
}

/// Command-line overrides of spec values.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub experiment: ExperimentSection,
    pub model: Option<ModelConfig>,
    pub query: toml::Table,
    /// Directory that relative paths resolve against.
    pub base_dir: PathBuf,
}

const MODEL_TABLES: [&str; 7] = ["model", "grid", "domain", "background", "single_site", "disorder", "interaction"];

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str_in(&text, base)
    }

    pub fn from_str_in(text: &str, base_dir: PathBuf) -> CliResult<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| CliError::parse(e.to_string()))?;
        let experiment: ExperimentSection = table
            .remove("experiment")
            .ok_or_else(|| CliError::parse("missing [experiment] table"))?
            .try_into()
            .map_err(|e: toml::de::Error| CliError::parse(format!("[experiment]: {e}")))?;
        let query = match table.remove("query") {
            None => toml::Table::new(),
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(CliError::parse("[query] must be a table")),
        };
        if let Some(k) = table.keys().find(|k| !MODEL_TABLES.contains(&k.as_str())) {
            return Err(CliError::parse(format!("unknown top-level table `{k}`")));
        }
        let model = if !table.is_empty() {
            if experiment.config.is_some() {
                return Err(CliError::parse("give either inline model tables or experiment.config, not both"));
            }
            let text = toml::to_string(&table).map_err(|e| CliError::parse(e.to_string()))?;
            Some(parse_model(&text)?)
        } else if let Some(cfg) = &experiment.config {
            let path = base_dir.join(cfg);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            Some(parse_model(&text)?)
        } else {
            None
        };
        Ok(Self { experiment, model, query, base_dir })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.experiment.seed = seed;
        }
        if let Some(t) = o.threads {
            self.experiment.threads = Some(t);
        }
    }

    pub fn kind(&self) -> Kind {
        self.experiment.kind
    }

    pub fn model(&self) -> CliResult<&ModelConfig> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::parse(format!("experiment kind `{}` needs a model configuration", self.kind().name())))
    }

    /// Typed view of the `[query]` table.
    pub fn query<T: for<'de> Deserialize<'de>>(&self) -> CliResult<T> {
        toml::Value::Table(self.query.clone())
            .try_into()
            .map_err(|e: toml::de::Error| CliError::parse(format!("[query]: {e}")))
    }

    /// Self-contained spec text: the model inlined, thread count and config
    /// path dropped. Running it reproduces the same CSV.
    pub fn effective_toml(&self) -> String {
        let mut exp = self.experiment.clone();
        exp.threads = None;
        exp.config = None;
        let mut t = toml::Table::new();
        t.insert("experiment".into(), toml::Value::try_from(&exp).expect("experiment serializes"));
        if let Some(m) = &self.model {
            let mt: toml::Table = toml::from_str(&m.to_toml_string()).expect("model round-trips");
            t.extend(mt);
        }
        t.insert("query".into(), toml::Value::Table(self.query.clone()));
        toml::to_string(&t).expect("spec serializes")
    }

    /// Hash of the model configuration, or of the effective spec when there is none.
    pub fn config_hash(&self) -> String {
        match &self.model {
            Some(m) => m.hash(),
            None => {
                let digest = Sha256::digest(self.effective_toml().as_bytes());
                digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
            }
        }
    }

    pub fn output_base(&self) -> PathBuf {
        self.base_dir.join(&self.experiment.output)
    }
}

fn parse_model(text: &str) -> CliResult<ModelConfig> {
    let cfg: ModelConfig = toml::from_str(text).map_err(|e| CliError::parse(format!("model configuration: {e}")))?;
    Ok(cfg)
}
