//! Experiment runners and their reports.
//!
//! Each experiment produces typed rows, written as CSV with a fixed column
//! order, a JSON sidecar carrying the configuration and seeds, and a list of
//! internal [`Check`]s whose conjunction decides the CLI exit code.

mod counterexample;
mod equivalence;
mod grid_law;

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::measures::Seed;

pub use counterexample::{run_counterexample, sup_k_call, CounterexampleParams, CounterexampleReport, CounterexampleRow};
pub use equivalence::{run_equivalence, EquivalenceFamily, EquivalenceParams, EquivalenceReport, EquivalenceRow};
pub use grid_law::{kolmogorov_distance, limit_law, run_grid_law, GridLawFamily, GridLawParams, GridLawReport, GridLawRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Counterexample,
    GridLaw,
    Equivalence,
}

impl ExperimentKind {
    pub fn required_keys(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Counterexample => &["N", "n_max"],
            ExperimentKind::GridLaw => &["family", "Ns"],
            ExperimentKind::Equivalence => &["family"],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub parameters: BTreeMap<String, Value>,
    pub seed: Seed,
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, seed: Seed, output_path: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            experiment,
            parameters: BTreeMap::new(),
            seed,
            output_path: output_path.into(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        for key in self.experiment.required_keys() {
            if !self.parameters.contains_key(*key) {
                return Err(Error::Config(format!("{:?} requires parameter `{key}`", self.experiment)));
            }
        }
        Ok(())
    }

    pub(crate) fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.parameters.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| Error::Config(format!("`{key}` must be a nonnegative integer, got {v}"))),
        }
    }

    pub(crate) fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.parameters.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::Config(format!("`{key}` must be a number, got {v}"))),
        }
    }

    pub(crate) fn str_param(&self, key: &str) -> Result<&str> {
        self.parameters
            .get(key)
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Config(format!("`{key}` must be a string")))
    }

    pub(crate) fn usize_list_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.parameters.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_u64()
                        .map(|x| x as usize)
                        .ok_or_else(|| Error::Config(format!("`{key}` must hold nonnegative integers")))
                })
                .collect(),
            Some(v) => Err(Error::Config(format!("`{key}` must be a list, got {v}"))),
        }
    }

    pub(crate) fn seed_list_or(&self, key: &str, default: &[u64]) -> Result<Vec<Seed>> {
        Ok(self
            .usize_list_or(key, &default.iter().map(|&s| s as usize).collect::<Vec<_>>())?
            .into_iter()
            .map(|s| Seed(s as u64))
            .collect())
    }

    /// Validates, runs and returns the report (without writing it).
    pub fn run(&self) -> Result<ExperimentReport> {
        self.validate()?;
        Ok(match self.experiment {
            ExperimentKind::Counterexample => {
                ExperimentReport::Counterexample(run_counterexample(&CounterexampleParams::from_config(self)?)?)
            }
            ExperimentKind::GridLaw => ExperimentReport::GridLaw(run_grid_law(&GridLawParams::from_config(self)?)?),
            ExperimentKind::Equivalence => {
                ExperimentReport::Equivalence(run_equivalence(&EquivalenceParams::from_config(self)?)?)
            }
        })
    }
}

/// Named internal assertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentReport {
    Counterexample(CounterexampleReport),
    GridLaw(GridLawReport),
    Equivalence(EquivalenceReport),
}

impl ExperimentReport {
    pub fn checks(&self) -> &[Check] {
        match self {
            ExperimentReport::Counterexample(r) => &r.checks,
            ExperimentReport::GridLaw(r) => &r.checks,
            ExperimentReport::Equivalence(r) => &r.checks,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }

    /// Writes the CSV rows to `config.output_path` and the sidecar next to it.
    pub fn write(&self, config: &ExperimentConfig) -> Result<PathBuf> {
        let file = File::create(&config.output_path)?;
        let mut w = csv::Writer::from_writer(file);
        match self {
            ExperimentReport::Counterexample(r) => write_rows(&mut w, &r.rows)?,
            ExperimentReport::GridLaw(r) => write_rows(&mut w, &r.rows)?,
            ExperimentReport::Equivalence(r) => write_rows(&mut w, &r.rows)?,
        }
        w.flush()?;
        let sidecar = sidecar_path(&config.output_path);
        let body = serde_json::json!({
            "config": config,
            "version": env!("CARGO_PKG_VERSION"),
            "checks": self.checks(),
            "passed": self.passed(),
            "report": self,
        });
        std::fs::write(&sidecar, serde_json::to_string_pretty(&body)?)?;
        Ok(sidecar)
    }
}

fn write_rows<W: std::io::Write, R: Serialize>(w: &mut csv::Writer<W>, rows: &[R]) -> Result<()> {
    for r in rows {
        w.serialize(r)?;
    }
    Ok(())
}

/// `rows.csv` → `rows.json`; an output already ending in `.json` gets `.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.with_extension("meta.json")
    } else {
        out.with_extension("json")
    }
}
