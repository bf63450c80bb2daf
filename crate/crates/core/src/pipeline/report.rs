use serde::{Deserialize, Serialize};

use super::targets::{Target, TargetSource, Tolerance};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    pub recovered: f64,
    pub uncertainty: Option<f64>,
    pub target: f64,
    pub target_source: TargetSource,
    pub tolerance: Tolerance,
    pub pass: bool,
}

impl Record {
    pub fn new(name: impl Into<String>, recovered: f64, uncertainty: Option<f64>, target: &Target) -> Self {
        let tolerance = target.effective_tolerance();
        Self {
            name: name.into(),
            recovered,
            uncertainty,
            target: target.value,
            target_source: target.source,
            tolerance,
            pass: tolerance.accepts(recovered, uncertainty, target.value),
        }
    }

    /// Re-evaluates the verdict from the stored numbers.
    pub fn recheck(&self) -> bool {
        self.tolerance.accepts(self.recovered, self.uncertainty, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// sha256 of the canonical config JSON, hex encoded.
    pub config_hash: String,
    pub seed: u64,
    pub toolkit_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<Record>,
    pub provenance: Provenance,
}

impl Report {
    pub fn record(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    /// Names of records whose stored verdict is a failure or disagrees with
    /// their own numbers.
    pub fn failures(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter(|r| !r.pass || !r.recheck())
            .map(|r| r.name.as_str())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
