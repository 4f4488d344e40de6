//! Versioned run configuration and the all-violations validator.

use std::fmt;

use geoprob::experiments::ExperimentConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u64,
    pub master_seed: u64,
    /// Where results go when --out is not given.
    #[serde(default)]
    pub output_dir: Option<String>,
    /// Set in manifests; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_version: Option<String>,
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.0.push(Violation { path: path.to_string(), message: message.into() });
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() { key.to_string() } else { format!("{path}.{key}") }
}

const COUNT_KEYS: &[&str] = &[
    "reps",
    "calibration_reps",
    "derivative_reps",
    "count_samples",
    "seeds",
    "classical_paths",
    "volume_mc_samples",
    "k",
    "k_max",
];
const GRID_KEYS: &[&str] = &["lambdas", "ts", "taus", "ns", "separations"];
const POSITIVE_KEYS: &[&str] = &["lambda", "rho", "half_width", "shell_width", "box_side", "side", "point_budget"];

/// Checks that do not need the typed config, so that one pass reports
/// every problem it can see.
fn walk(value: &Value, path: &str, out: &mut Collector) {
    match value {
        Value::Object(map) => {
            for (key, v) in map {
                let p = join(path, key);
                check_field(key, v, &p, path, out);
                walk(v, &p, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                walk(v, &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

fn check_field(key: &str, v: &Value, p: &str, parent: &str, out: &mut Collector) {
    if COUNT_KEYS.contains(&key) && !v.as_u64().is_some_and(|n| n > 0) {
        out.push(p, format!("must be a positive integer, got {v}"));
    }
    if GRID_KEYS.contains(&key) {
        match v.as_array() {
            Some(a) if a.is_empty() => out.push(p, "grid must not be empty"),
            Some(a) if a.iter().any(|x| !x.is_number()) => out.push(p, "grid entries must be numbers"),
            Some(_) => {}
            None => out.push(p, "must be an array"),
        }
    }
    if POSITIVE_KEYS.contains(&key) && !v.as_f64().is_some_and(|x| x > 0.0 && x.is_finite()) {
        out.push(p, format!("must be positive, got {v}"));
    }
    if parent.ends_with("tolerances") {
        let ok = match v {
            Value::Number(n) => n.as_f64().is_some_and(|x| x > 0.0),
            Value::Array(a) => a.iter().all(|x| x.is_number()),
            Value::Bool(_) | Value::Null => true,
            _ => false,
        };
        if !ok {
            out.push(p, format!("tolerance must be positive, got {v}"));
        }
    }
    if key == "t" && v.is_number() && !v.as_f64().is_some_and(|x| x > 0.0) {
        out.push(p, format!("nn_threshold needs t > 0, got {v}"));
    }
}

/// Keys present in `input` that the typed config did not consume.
fn unknown_keys(input: &Value, echo: &Value, path: &str, out: &mut Collector) {
    if let (Value::Object(a), Value::Object(b)) = (input, echo) {
        for (k, v) in a {
            let p = join(path, k);
            match b.get(k) {
                Some(e) => unknown_keys(v, e, &p, out),
                None => out.push(&p, "unknown field"),
            }
        }
    }
}

/// Parses and checks a raw document, returning every violation found.
pub fn validate_config(raw: &str) -> Result<RunConfig, Vec<Violation>> {
    let mut out = Collector(Vec::new());
    let value: Value = match serde_json::from_str(raw) {
        Ok(v) => v,
        Err(e) => {
            out.push("", format!("not valid JSON: {e}"));
            return Err(out.0);
        }
    };
    let Some(map) = value.as_object() else {
        out.push("", "config must be a JSON object");
        return Err(out.0);
    };
    check_header(map, &mut out);
    walk(&value, "", &mut out);
    let typed: Option<RunConfig> = match serde_json::from_value(value.clone()) {
        Ok(c) => Some(c),
        Err(e) => {
            out.push("", format!("schema: {e}"));
            None
        }
    };
    if let Some(c) = &typed {
        if let Err(e) = c.experiment.validate() {
            out.push(c.experiment.name(), e.to_string());
        }
        if let Ok(echo) = serde_json::to_value(c) {
            unknown_keys(&value, &echo, "", &mut out);
        }
    }
    match typed {
        Some(c) if out.0.is_empty() => Ok(c),
        _ => {
            out.0.dedup();
            Err(out.0)
        }
    }
}

fn check_header(map: &Map<String, Value>, out: &mut Collector) {
    match map.get("schema_version") {
        None => out.push("schema_version", "missing"),
        Some(v) if v.as_u64() != Some(SCHEMA_VERSION) => {
            out.push("schema_version", format!("unsupported version {v}, expected {SCHEMA_VERSION}"))
        }
        _ => {}
    }
    match map.get("master_seed") {
        None => out.push("master_seed", "missing; runs never seed from the clock"),
        Some(v) if v.as_u64().is_none() => out.push("master_seed", format!("must be a non-negative integer, got {v}")),
        _ => {}
    }
    match map.get("experiment").and_then(Value::as_str) {
        None => out.push("experiment", "missing experiment name"),
        Some(name) if !EXPERIMENTS.contains(&name) => {
            out.push("experiment", format!("unknown experiment {name:?}; expected one of {}", EXPERIMENTS.join(", ")))
        }
        _ => {}
    }
}

pub const EXPERIMENTS: &[&str] =
    &["log_laplace", "cumulants", "mdp", "lil", "mixing", "depoissonize", "v_table", "delta_table", "gibbs_check"];

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1, "master_seed": 3, "experiment": "cumulants",
        "functional": {"kind": "trivial_one"},
        "density": {"kind": "constant", "value": 1.0, "dim": 1},
        "test_function": {"kind": "constant", "value": 1.0},
        "lambdas": [64, 128], "reps": 100, "tolerances": {}
    }"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let c = validate_config(MINIMAL).unwrap();
        assert_eq!(c.master_seed, 3);
        let ExperimentConfig::Cumulants(cum) = &c.experiment else { panic!("wrong variant") };
        assert_eq!(cum.tolerances.slope_fit_se, 2.0);
        assert!(c.output_dir.is_none());
    }

    #[test]
    fn negative_reps_is_named() {
        let raw = MINIMAL.replace("\"reps\": 100", "\"reps\": -5");
        let errs = validate_config(&raw).unwrap_err();
        assert!(errs.iter().any(|v| v.path == "reps"), "{errs:?}");
    }

    #[test]
    fn zero_threshold_is_rejected() {
        let raw = MINIMAL.replace(r#"{"kind": "trivial_one"}"#, r#"{"kind": "nn_threshold", "t": 0.0}"#);
        let errs = validate_config(&raw).unwrap_err();
        assert!(errs.iter().any(|v| v.path == "functional.t" && v.message.contains("t > 0")), "{errs:?}");
    }

    #[test]
    fn all_violations_are_reported() {
        let raw = MINIMAL
            .replace("\"reps\": 100", "\"reps\": 0")
            .replace("\"lambdas\": [64, 128]", "\"lambdas\": []")
            .replace("\"master_seed\": 3,", "");
        let errs = validate_config(&raw).unwrap_err();
        for p in ["reps", "lambdas", "master_seed"] {
            assert!(errs.iter().any(|v| v.path == p), "missing {p} in {errs:?}");
        }
    }

    #[test]
    fn unknown_fields_are_flagged() {
        let raw = MINIMAL.replace("\"reps\": 100", "\"reps\": 100, \"repz\": 4");
        let errs = validate_config(&raw).unwrap_err();
        assert!(errs.iter().any(|v| v.path == "repz"), "{errs:?}");
    }

    #[test]
    fn wrong_version_is_rejected() {
        let raw = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(validate_config(&raw).unwrap_err().iter().any(|v| v.path == "schema_version"));
    }
}
