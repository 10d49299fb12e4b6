//! Serializable experiment records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Warning;

pub const REPORT_SCHEMA: &str = "hypharm-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub refined_ratio: f64,
    pub delta_pct: f64,
}

impl Stability {
    pub fn between(base: f64, refined: f64) -> Self {
        let delta_pct = if base == 0.0 && refined == 0.0 {
            0.0
        } else {
            100.0 * (refined - base).abs() / base.abs().max(refined.abs())
        };
        Self {
            refined_ratio: refined,
            delta_pct,
        }
    }
}

/// One experiment run: the measured norms, the ratio they define, and enough
/// metadata to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub experiment: String,
    /// The statement the experiment exercises, in words.
    pub statement: String,
    pub tool_version: String,
    #[serde(default)]
    pub config_hash: Option<String>,
    pub grid_meta: BTreeMap<String, Value>,
    pub family: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    #[serde(default)]
    pub stability: Option<Stability>,
    pub warnings: Vec<String>,
    pub pass: bool,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub timestamp: Option<String>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, statement: impl Into<String>) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            experiment: experiment.into(),
            statement: statement.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: None,
            grid_meta: BTreeMap::new(),
            family: String::new(),
            lhs: 0.0,
            rhs: 0.0,
            ratio: 0.0,
            stability: None,
            warnings: Vec::new(),
            pass: true,
            metrics: BTreeMap::new(),
            timestamp: None,
        }
    }

    pub fn family(mut self, family: impl Into<String>) -> Self {
        self.family = family.into();
        self
    }

    /// Sets lhs/rhs and derives the ratio (zero when rhs vanishes).
    pub fn norms(mut self, lhs: f64, rhs: f64) -> Self {
        self.lhs = lhs;
        self.rhs = rhs;
        self.ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        self
    }

    pub fn meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.grid_meta.insert(key.to_string(), value.into());
        self
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    pub fn warn(&mut self, w: &Warning) {
        let s = w.to_string();
        if !self.warnings.contains(&s) {
            self.warnings.push(s);
        }
    }

    pub fn warn_all<'a>(&mut self, ws: impl IntoIterator<Item = &'a Warning>) {
        for w in ws {
            self.warn(w);
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
