use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use impscat_core::SolveStats;
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Headline {
    Flag(bool),
    Number(f64),
    Sequence(Vec<f64>),
    Text(String),
}

impl Headline {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Headline::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_sequence(&self) -> Option<&[f64]> {
        match self {
            Headline::Sequence(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_flag(&self) -> Option<bool> {
        match self {
            Headline::Flag(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Headline {
    fn from(v: f64) -> Self {
        Headline::Number(v)
    }
}

impl From<usize> for Headline {
    fn from(v: usize) -> Self {
        Headline::Number(v as f64)
    }
}

impl From<bool> for Headline {
    fn from(v: bool) -> Self {
        Headline::Flag(v)
    }
}

impl From<Vec<f64>> for Headline {
    fn from(v: Vec<f64>) -> Self {
        Headline::Sequence(v)
    }
}

impl From<String> for Headline {
    fn from(v: String) -> Self {
        Headline::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub label: String,
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: ScenarioKind,
    pub config: ScenarioConfig,
    pub wall_time_s: f64,
    pub threads: usize,
    pub solves: Vec<SolveRecord>,
    pub headline: BTreeMap<String, Headline>,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    pub fn new(scenario: ScenarioKind, config: &ScenarioConfig) -> Self {
        RunReport {
            scenario,
            config: config.clone(),
            wall_time_s: 0.0,
            threads: rayon::current_num_threads(),
            solves: Vec::new(),
            headline: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Headline>) {
        self.headline.insert(key.to_string(), value.into());
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.headline.get(key).and_then(Headline::as_number)
    }

    pub fn sequence(&self, key: &str) -> Option<&[f64]> {
        self.headline.get(key).and_then(Headline::as_sequence)
    }

    pub fn record_solve(&mut self, label: impl Into<String>, stats: &SolveStats) {
        self.solves.push(SolveRecord {
            label: label.into(),
            iterations: stats.iterations,
            relative_residual: stats.relative_residual,
        });
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report is serializable");
        std::fs::write(path, text + "\n").map_err(CliError::io(path))
    }
}
