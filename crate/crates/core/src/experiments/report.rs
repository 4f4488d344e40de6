use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A CSV-shaped table of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }
}

/// A pass/fail judgement against a tolerance taken from the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    /// Config field holding the tolerance.
    pub tolerance_key: String,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, passed: bool, observed: f64, tolerance_key: &str, tolerance: f64) -> Self {
        Self { name: name.into(), passed, observed, tolerance_key: tolerance_key.into(), tolerance, detail: String::new() }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameters: Value,
    pub master_seed: u64,
    /// Named scalar results and diagnostics.
    pub cells: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub tables: BTreeMap<String, Table>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, parameters: Value, master_seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            parameters,
            master_seed,
            cells: BTreeMap::new(),
            verdicts: Vec::new(),
            tables: BTreeMap::new(),
        }
    }

    pub fn cell(&mut self, name: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.cells.insert(name.into(), v);
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn failures(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.passed).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0, 0.1]);
        t.push(vec![-2.5, 1e-20]);
        assert_eq!(t.to_csv(), "a,b\n1,0.1\n-2.5,0.00000000000000000001\n");
    }

    #[test]
    fn verdicts_aggregate() {
        let mut r = ExperimentReport::new("x", Value::Null, 1);
        assert!(r.passed());
        r.verdict(Verdict::new("ok", true, 0.1, "tol", 1.0));
        r.verdict(Verdict::new("bad", false, 3.0, "tol", 1.0));
        assert!(!r.passed());
        assert_eq!(r.failures()[0].name, "bad");
        assert!(r.to_json().ends_with("}\n"));
    }
}
