//! Experiment configuration: a TOML file plus `KEY=VALUE` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::ScoreConfig;
use crate::model::Innovation;
use crate::set_cover::CensusOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Simulate,
    Estimate,
    Census,
    Metrics,
}

/// Which estimator a simulation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Thresholded gap scores, DAG and ordering unknown.
    #[default]
    Ordering,
    /// Bounding matrix restricted to the true DAG.
    KnownDag,
}

/// The graph an estimate is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    /// Support of the Kleene star, i.e. all ancestor pairs.
    #[default]
    Star,
    /// Edges of the sampled DAG only.
    Dag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocess {
    #[default]
    NegLog,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Median of the off-diagonal scores of each sample.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Fixed(f64),
    Mode(ThresholdMode),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Fixed(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dims {
    One(usize),
    Many(Vec<usize>),
}

impl Default for Dims {
    fn default() -> Self {
        Dims::Many(vec![5, 10, 30])
    }
}

impl Dims {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Dims::One(d) => vec![*d],
            Dims::Many(ds) => ds.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CensusSection {
    pub samples: usize,
    #[serde(flatten)]
    pub options: CensusOptions,
}

impl Default for CensusSection {
    fn default() -> Self {
        CensusSection {
            samples: 200,
            options: CensusOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    pub preprocess: Preprocess,
    /// Column names to keep, in this order; all columns when absent.
    pub columns: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub truth: Option<PathBuf>,
    pub estimate: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub d: Dims,
    pub p: f64,
    pub tau: f64,
    pub innovation: Innovation,
    pub n: usize,
    pub repetitions: usize,
    pub permute: bool,
    pub estimator: Estimator,
    pub truth: Truth,
    pub scoring: ScoreConfig,
    pub threshold: Threshold,
    pub census: CensusSection,
    pub data: DataSection,
    pub metrics: MetricsSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Simulate,
            seed: None,
            output: None,
            d: Dims::default(),
            p: 1.0,
            tau: 1.0,
            innovation: Innovation::Gaussian { mean: 0.0, sd: 3.0 },
            n: 1000,
            repetitions: 50,
            permute: false,
            estimator: Estimator::Ordering,
            truth: Truth::Star,
            scoring: ScoreConfig::default(),
            threshold: Threshold::default(),
            census: CensusSection::default(),
            data: DataSection::default(),
            metrics: MetricsSection::default(),
        }
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_owned()),
    }
}

/// Sets `key` (dotted path) to `value` in a TOML table, creating sections.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not KEY=VALUE")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{part:?} is not a section")))?;
    }
    node.insert(
        parts[parts.len() - 1].to_owned(),
        parse_override_value(raw.trim()),
    );
    Ok(())
}

impl ExperimentConfig {
    /// Parses a TOML document, applying overrides before deserializing.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    /// Reads `path` if given, otherwise starts from defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required".to_owned()))
    }

    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        let dims = self.d.values();
        if dims.is_empty() {
            return Err(Error::Config(
                "d must list at least one dimension".to_owned(),
            ));
        }
        if let Some(&bad) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::Config(format!("invalid dimension {bad}")));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::Config(format!(
                "p must lie in (0, 1], got {}",
                self.p
            )));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "tau must be finite and >= 0, got {}",
                self.tau
            )));
        }
        self.innovation
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.scoring
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Threshold::Fixed(t) = self.threshold {
            if !t.is_finite() {
                return Err(Error::Config(format!("threshold must be finite, got {t}")));
            }
        }
        if self.mode == Mode::Simulate && self.estimator == Estimator::Ordering {
            let needed = self.scoring.min_observations();
            if self.n < needed {
                return Err(Error::Config(format!(
                    "n = {} is below the {needed} observations the score needs",
                    self.n
                )));
            }
        }
        let c = &self.census.options;
        if !(c.weight_low < c.weight_high && c.weight_low.is_finite() && c.weight_high.is_finite())
        {
            return Err(Error::Config("census weight range is empty".to_owned()));
        }
        if self.mode == Mode::Estimate && self.data.path.is_none() {
            return Err(Error::Config("estimate needs data.path".to_owned()));
        }
        if self.mode == Mode::Metrics
            && (self.metrics.truth.is_none() || self.metrics.estimate.is_none())
        {
            return Err(Error::Config(
                "metrics needs metrics.truth and metrics.estimate".to_owned(),
            ));
        }
        Ok(())
    }

    /// Fully resolved config as one line of JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
