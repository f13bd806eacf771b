//! Experiment reports. Tables go to CSV (deterministic); timings only to `report.json`.

use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition, e.g. `<= 1e-6`.
    pub condition: String,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub config: serde_json::Value,
    pub build: String,
    pub seed: u64,
    pub timings_ms: Vec<(String, f64)>,
    pub results: serde_json::Map<String, serde_json::Value>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    #[serde(skip)]
    clock: Option<Instant>,
}

impl ExperimentReport {
    pub fn new(kind: &str, config: serde_json::Value, seed: u64) -> Self {
        ExperimentReport {
            kind: kind.to_string(),
            config,
            build: build_id(),
            seed,
            timings_ms: Vec::new(),
            results: serde_json::Map::new(),
            checks: Vec::new(),
            files: Vec::new(),
            clock: Some(Instant::now()),
        }
    }

    /// Records the time since the previous stage.
    pub fn stage(&mut self, name: &str) {
        let now = Instant::now();
        if let Some(start) = self.clock.replace(now) {
            self.timings_ms.push((name.to_string(), (now - start).as_secs_f64() * 1e3));
        }
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    pub fn check_le(&mut self, name: &str, value: f64, bound: f64) {
        self.checks.push(Check { name: name.into(), value, condition: format!("<= {bound:e}"), pass: value <= bound });
    }

    pub fn check_ge(&mut self, name: &str, value: f64, bound: f64) {
        self.checks.push(Check { name: name.into(), value, condition: format!(">= {bound}"), pass: value >= bound });
    }

    pub fn check_in(&mut self, name: &str, value: f64, lo: f64, hi: f64) {
        self.checks.push(Check { name: name.into(), value, condition: format!("in [{lo}, {hi}]"), pass: value >= lo && value <= hi });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

pub fn build_id() -> String {
    format!(
        "npsense-cli {} ({})",
        env!("CARGO_PKG_VERSION"),
        option_env!("NPSENSE_BUILD_ID").unwrap_or(if cfg!(debug_assertions) { "debug" } else { "release" })
    )
}
