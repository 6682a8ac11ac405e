//! Versioned JSON reports emitted by the command-line tool.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// One checked claim and the residual that decided it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Assertion {
    pub fn new(name: impl Into<String>, pass: bool, residual: f64) -> Self {
        Assertion { name: name.into(), pass, residual, detail: None }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: Value,
    pub inputs_digest: String,
    pub outputs: Map<String, Value>,
    pub residuals: Map<String, Value>,
    pub assertions: Vec<Assertion>,
}

impl Report {
    pub fn new(command: impl Into<String>, config: Value) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config,
            inputs_digest: digest(&[]),
            outputs: Map::new(),
            residuals: Map::new(),
            assertions: Vec::new(),
        }
    }

    /// Sets `inputs_digest` to the sha256 of the concatenated inputs.
    pub fn digest_inputs(&mut self, inputs: &[&[u8]]) {
        self.inputs_digest = digest(inputs);
    }

    pub fn output(&mut self, key: &str, value: Value) {
        self.outputs.insert(key.to_string(), value);
    }

    pub fn residual(&mut self, key: &str, value: f64) {
        self.residuals.insert(key.to_string(), finite_or_string(value));
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, residual: f64) {
        self.assertions.push(Assertion::new(name, pass, residual));
    }

    pub fn push(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        for a in v["assertions"].as_array_mut().expect("array") {
            let r = a["residual"].as_f64();
            if r.is_none() {
                a["residual"] = Value::String("inf".into());
            }
        }
        v
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} (schema {})", self.command, self.schema_version);
        let _ = writeln!(out, "config: {}", self.config);
        let _ = writeln!(out, "inputs sha256: {}", self.inputs_digest);
        for (k, v) in &self.outputs {
            match v {
                Value::String(s) => {
                    let _ = writeln!(out, "{k}: {s}");
                }
                other => {
                    let _ = writeln!(out, "{k}: {other}");
                }
            }
        }
        for (k, v) in &self.residuals {
            let _ = writeln!(out, "residual {k}: {v}");
        }
        for a in &self.assertions {
            let mark = if a.pass { "PASS" } else { "FAIL" };
            let _ = write!(out, "[{mark}] {} (residual {:.3e})", a.name, a.residual);
            if let Some(d) = &a.detail {
                let _ = write!(out, " {d}");
            }
            out.push('\n');
        }
        let passed = self.assertions.iter().filter(|a| a.pass).count();
        let _ = writeln!(out, "{passed}/{} assertions passed", self.assertions.len());
        out
    }
}

fn digest(inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for i in inputs {
        h.update(i);
    }
    hex::encode(h.finalize())
}

fn finite_or_string(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn report_json_shape() {
        let mut r = Report::new("twist", json!({"mode": "exact"}));
        r.digest_inputs(&[b"abc"]);
        r.output("phit", json!({"degree": 3, "entries": []}));
        r.residual("metric", 0.0);
        r.check("metric preserved", true, 0.0);
        r.check("never", false, f64::INFINITY);
        let v = r.to_json();
        assert_eq!(v["schema_version"], json!(SCHEMA_VERSION));
        assert_eq!(
            v["inputs_digest"],
            json!("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")
        );
        assert_eq!(v["assertions"][1]["residual"], json!("inf"));
        assert!(!r.all_pass());
        assert!(r.to_text().contains("1/2 assertions passed"));
    }
}
