//! The experiment file: a TOML document whose scenario sections override
//! individual fields of the built-in baseline and guided scenarios.
//!
//! ```toml
//! seed = 42
//! replications = 100
//!
//! [paths]
//! data = "cohort/discharges.csv"
//! models = "models"
//! out = "out"
//!
//! [scenario]            # applied to both scenarios
//! mco_capacity = 12
//!
//! [guided]
//! discipline = "fifo"
//!
//! [training]
//! tree_count = 100
//! ```
//!
//! Unknown keys anywhere are rejected. Arrays of tables (such as
//! `hospitals`) are merged element by element; a table whose `kind` or
//! `mode` changes is replaced rather than merged.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::harness::report::ReportFormat;
use crate::ingest::SyntheticCohortSpec;
use crate::learn::{CvOptions, ForestParams, DEFAULT_FOLDS};
use crate::sim::{ScenarioConfig, DEFAULT_REPLICATIONS};

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub data: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub history: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub tree_count: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: Option<usize>,
    pub folds: usize,
    pub smote: bool,
    pub trim_outliers: bool,
    /// Random-search candidates per model; 0 trains the fixed parameters.
    pub tune_budget: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let p = ForestParams::default();
        TrainingConfig {
            tree_count: p.tree_count,
            max_depth: p.max_depth,
            min_samples_leaf: p.min_samples_leaf,
            features_per_split: p.features_per_split,
            folds: DEFAULT_FOLDS,
            smote: true,
            trim_outliers: true,
            tune_budget: 0,
        }
    }
}

impl TrainingConfig {
    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            tree_count: self.tree_count,
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            features_per_split: self.features_per_split,
        }
    }

    pub fn cv_options(&self) -> CvOptions {
        let d = CvOptions::default();
        CvOptions {
            folds: self.folds,
            smote_k: d.smote_k.filter(|_| self.smote),
            trim_threshold: d.trim_threshold.filter(|_| self.trim_outliers),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub format: ReportFormat,
    /// Also write every simulated case.
    pub case_log: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            format: ReportFormat::Table,
            case_log: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub paths: PathsConfig,
    pub scenario: Table,
    pub baseline: Table,
    pub guided: Table,
    pub cohort: Table,
    pub training: TrainingConfig,
    pub report: ReportConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.replications == Some(0) {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        // Surface override errors at load time rather than mid-run.
        config.baseline_scenario()?;
        config.guided_scenario()?;
        config.cohort_spec()?;
        Ok(config)
    }

    pub fn replications(&self) -> usize {
        self.replications.unwrap_or(DEFAULT_REPLICATIONS)
    }

    pub fn baseline_scenario(&self) -> Result<ScenarioConfig> {
        self.scenario_from(ScenarioConfig::baseline(), &self.baseline)
    }

    pub fn guided_scenario(&self) -> Result<ScenarioConfig> {
        self.scenario_from(ScenarioConfig::guided(), &self.guided)
    }

    fn scenario_from(&self, base: ScenarioConfig, specific: &Table) -> Result<ScenarioConfig> {
        let mut c: ScenarioConfig = apply_overrides(&base, &[&self.scenario, specific])?;
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        c.validate_params()?;
        Ok(c)
    }

    pub fn cohort_spec(&self) -> Result<SyntheticCohortSpec> {
        let mut spec: SyntheticCohortSpec =
            apply_overrides(&SyntheticCohortSpec::default(), &[&self.cohort])?;
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Keys that select an enum variant; changing one replaces the whole table.
const TAG_KEYS: [&str; 2] = ["kind", "mode"];

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o))
            if TAG_KEYS
                .iter()
                .any(|k| o.contains_key(*k) && b.get(*k) != o.get(*k)) =>
        {
            *b = o.clone();
        }
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (Value::Array(b), Value::Array(o)) if o.iter().all(Value::is_table) => {
            for (i, v) in o.iter().enumerate() {
                match b.get_mut(i) {
                    Some(slot) => merge(slot, v),
                    None => b.push(v.clone()),
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

/// `base` with each override table merged over it in turn.
pub fn apply_overrides<T: Serialize + DeserializeOwned>(base: &T, layers: &[&Table]) -> Result<T> {
    let mut value = Value::try_from(base).map_err(|e| Error::Config(e.to_string()))?;
    for layer in layers {
        merge(&mut value, &Value::Table((*layer).clone()));
    }
    value
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}
