use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, passed: bool, detail: Option<Value>) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

/// Machine-readable result of one command. Contains no timestamps, so equal
/// inputs and seed give byte-identical JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    /// SHA-256 over the model digest and the resolved arguments.
    pub inputs_digest: String,
    pub results: Value,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl RunReport {
    pub fn new(command: &str, inputs_digest: String, seed: u64, results: Value, checks: Vec<CheckOutcome>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { command: command.into(), tool_version: env!("CARGO_PKG_VERSION").into(), seed, inputs_digest, results, checks, passed }
    }

    pub fn checks_csv(&self) -> String {
        let mut s = String::from("check,passed\n");
        for c in &self.checks {
            s.push_str(&format!("{},{}\n", c.name, c.passed));
        }
        s
    }

    /// One line per check followed by a total.
    pub fn scorecard(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!("[{}] {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name));
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        s.push_str(&format!("{passed}/{} passed\n", self.checks.len()));
        s
    }
}
