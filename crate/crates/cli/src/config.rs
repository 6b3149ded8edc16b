//! Experiment files: TOML with a fixed set of top-level keys, plus
//! `key=value` overrides applied to the parsed document before it is
//! interpreted.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sofim::harness::{
    DataSpec, ExperimentConfig, OptimizerId, OptimizerSpec, ProblemSpec, DEFAULT_BATCH_SIZE,
};

/// Consulted when neither the command line nor the config file names an
/// output directory.
pub const OUTPUT_DIR_ENV: &str = "SOFIM_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "sofim-output";
const DEFAULT_EVAL_EVERY: u64 = 10;

/// A problem with the configuration itself, as opposed to a failure while
/// running it.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(message: impl Into<String>) -> ConfigError {
    ConfigError(message.into().trim_end().to_string())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
}

impl Grid {
    fn is_empty(&self) -> bool {
        self.eta.is_none() && self.rho.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub iterations: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_every: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub loss_thresholds: Vec<f64>,
    pub optimizer: OptimizerId,
    #[serde(default)]
    pub hyperparameters: toml::Table,
    pub problem: ProblemSpec,
    #[serde(default, skip_serializing_if = "Grid::is_empty")]
    pub grid: Grid,
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}

/// Reads `path`, applies `overrides` in order, and interprets the result.
/// Relative CSV paths are resolved against the config file's directory.
pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentFile, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: toml::Table =
        toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    for raw in overrides {
        apply_override(&mut doc, raw)?;
    }
    let mut file: ExperimentFile = toml::Value::Table(doc)
        .try_into()
        .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    absolutize_data_path(&mut file.problem, base)?;
    Ok(file)
}

fn absolutize_data_path(problem: &mut ProblemSpec, base: &Path) -> Result<(), ConfigError> {
    let data = match problem {
        ProblemSpec::Quadratic { .. } => return Ok(()),
        ProblemSpec::Logistic { data }
        | ProblemSpec::Softmax { data }
        | ProblemSpec::Mlp { data, .. } => data,
    };
    if let DataSpec::Csv { path, .. } = data {
        if path.is_relative() {
            let joined = base.join(&*path);
            *path = std::path::absolute(&joined)
                .map_err(|e| config_error(format!("cannot resolve {}: {e}", joined.display())))?;
        }
    }
    Ok(())
}

/// Applies one `dotted.key=value` override. The value is read as a TOML
/// literal when it parses as one and as a bare string otherwise.
pub fn apply_override(doc: &mut toml::Table, raw: &str) -> Result<(), ConfigError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| config_error(format!("override {raw:?} is not of the form key=value")))?;
    let key = key.trim();
    let value = parse_literal(value.trim());
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_error(format!("override key {key:?} is malformed")));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut table = doc;
    for part in parents {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| config_error(format!("override {key:?}: {part:?} is not a table")))?;
    }
    if table.get(*last).is_some_and(toml::Value::is_table) {
        return Err(config_error(format!(
            "override {key:?} targets a table, not a value"
        )));
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl ExperimentFile {
    /// Default hyperparameters for the chosen optimizer, overlaid with the
    /// ones given in `[hyperparameters]`. Keys the optimizer does not take
    /// are rejected by name.
    pub fn optimizer_spec(&self) -> Result<OptimizerSpec, ConfigError> {
        let defaults =
            toml::Value::try_from(self.optimizer.spec()).expect("optimizer spec serializes");
        let mut table = defaults.as_table().cloned().unwrap_or_default();
        for (key, value) in &self.hyperparameters {
            if key == "kind" {
                return Err(config_error(
                    "[hyperparameters] may not set `kind`; use `optimizer`",
                ));
            }
            table.insert(key.clone(), value.clone());
        }
        let spec: OptimizerSpec = toml::Value::Table(table).try_into().map_err(|e| {
            config_error(format!(
                "[hyperparameters] for {}: {e}",
                self.optimizer.spec().id()
            ))
        })?;
        spec.validate()
            .map_err(|e| config_error(format!("[hyperparameters]: {e}")))?;
        Ok(spec)
    }

    pub fn eval_every(&self) -> u64 {
        self.eval_every
            .unwrap_or(DEFAULT_EVAL_EVERY.min(self.iterations.max(1)))
    }

    pub fn experiment(&self, optimizer: OptimizerSpec) -> Result<ExperimentConfig, ConfigError> {
        let cfg = ExperimentConfig {
            problem: self.problem.clone(),
            optimizer,
            batch_size: self.batch_size,
            total_iterations: self.iterations,
            eval_every: self.eval_every(),
            seed: self.seed,
            loss_thresholds: self.loss_thresholds.clone(),
        };
        cfg.validate().map_err(|e| config_error(e.to_string()))?;
        Ok(cfg)
    }

    /// This file with every default written out, suitable for re-running.
    pub fn effective(&self, output_dir: &Path) -> Result<ExperimentFile, ConfigError> {
        let spec = self.optimizer_spec()?;
        let mut hyperparameters = toml::Value::try_from(spec)
            .expect("optimizer spec serializes")
            .as_table()
            .cloned()
            .unwrap_or_default();
        hyperparameters.remove("kind");
        Ok(ExperimentFile {
            eval_every: Some(self.eval_every()),
            output_dir: Some(output_dir.to_path_buf()),
            hyperparameters,
            ..self.clone()
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment file serializes")
    }
}

/// Output directory precedence: command line, config file, environment,
/// then a fixed fallback under the working directory.
pub fn output_dir(flag: Option<&Path>, file: Option<&Path>) -> PathBuf {
    flag.or(file)
        .map(Path::to_path_buf)
        .or_else(|| {
            std::env::var_os(OUTPUT_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
}
