//! Reference values that report records are judged against.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Published constants, checked in next to the crate.
const PAPER_TARGETS: &str = include_str!("../../data/paper_targets.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    /// `|recovered − target| ≤ value`
    Abs(f64),
    /// `|recovered − target| ≤ value·|target|`
    Rel(f64),
    /// `|recovered − target| ≤ value·uncertainty` (the recovered 1σ).
    Sigma(f64),
}

impl Tolerance {
    pub fn accepts(&self, recovered: f64, uncertainty: Option<f64>, target: f64) -> bool {
        let diff = (recovered - target).abs();
        if !diff.is_finite() {
            return false;
        }
        match *self {
            Tolerance::Abs(t) => diff <= t,
            Tolerance::Rel(t) => diff <= t * target.abs(),
            Tolerance::Sigma(k) => uncertainty.is_some_and(|s| s.is_finite() && diff <= k * s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSource {
    /// Quoted directly in the publication.
    Paper,
    /// Computed from published numbers.
    Derived,
    /// Taken from the scenario configuration (model truth).
    Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Tolerance>,
    pub source: TargetSource,
}

impl Target {
    pub fn config(value: f64, tolerance: Tolerance) -> Self {
        Self { value, uncertainty: None, tolerance: Some(tolerance), source: TargetSource::Config }
    }

    /// Explicit tolerance if given, else three times the quoted uncertainty,
    /// else 5% relative.
    pub fn effective_tolerance(&self) -> Tolerance {
        match (self.tolerance, self.uncertainty) {
            (Some(t), _) => t,
            (None, Some(u)) => Tolerance::Abs(3.0 * u),
            (None, None) => Tolerance::Rel(0.05),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetTable(BTreeMap<String, Target>);

impl TargetTable {
    pub fn parse(json: &str) -> Result<Self> {
        let map: BTreeMap<String, Target> = serde_json::from_str(json)?;
        for (k, t) in &map {
            if !t.value.is_finite() {
                return Err(Error::validation(format!("target `{k}` is not finite")));
            }
        }
        Ok(Self(map))
    }

    pub fn paper() -> Self {
        Self::parse(PAPER_TARGETS).expect("shipped target table is valid")
    }

    pub fn get(&self, key: &str) -> Option<&Target> {
        self.0.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}
