//! The JSON report written by every command.

use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub params: Value,
    pub value: Value,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub data: Value,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Report { command: command.to_string(), config, checks: Vec::new(), data: json!({}), pass: true }
    }

    /// A check whose value is compared against a tolerance: `|value| ≤ tol`.
    pub fn within(&mut self, name: &str, params: Value, value: f64, tol: f64) {
        let pass = value.abs() <= tol;
        self.push(name, params, json!(value), Some(tol), pass);
    }

    /// A check that passes iff `value ≥ bound`.
    pub fn at_least(&mut self, name: &str, params: Value, value: f64, bound: f64) {
        self.push(name, params, json!(value), Some(bound), value >= bound);
    }

    pub fn flag(&mut self, name: &str, params: Value, value: Value, pass: bool) {
        self.push(name, params, value, None, pass);
    }

    pub fn push(&mut self, name: &str, params: Value, value: Value, tolerance: Option<f64>, pass: bool) {
        self.checks.push(Check { name: name.to_string(), params, value, tolerance, pass });
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.data[key] = v;
    }

    /// Sorts the checks and renders the document.
    pub fn finish(mut self) -> (bool, String) {
        self.checks.sort_by_cached_key(|c| (c.name.clone(), c.params.to_string()));
        self.pass = self.checks.iter().all(|c| c.pass);
        let text = serde_json::to_string_pretty(&self).expect("reports serialize");
        (self.pass, text + "\n")
    }
}
