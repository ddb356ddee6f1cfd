use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

/// One solve along one route. Keys are emitted in sorted order.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub instance: String,
    pub route: String,
    pub status: String,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationarity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complementarity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interpretation: Option<String>,
    pub n: usize,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pivots_per_sec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<String>>,
}

pub fn sci(x: f64) -> String {
    // -0 prints as 0
    format!("{:.6e}", x + 0.0)
}

pub fn exact(x: f64) -> String {
    format!("{x:.16e}")
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(scalar).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

/// `key=value` lines in sorted key order.
pub fn key_values(v: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(map) = v {
        for (k, x) in map {
            let _ = writeln!(out, "{k}={}", scalar(x));
        }
    }
    out
}

impl RunReport {
    pub fn render(&self, json: bool) -> String {
        let v = serde_json::to_value(self).expect("plain data");
        if json {
            serde_json::to_string_pretty(&v).expect("plain data") + "\n"
        } else {
            key_values(&v)
        }
    }
}
