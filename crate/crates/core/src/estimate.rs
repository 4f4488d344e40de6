use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A Monte Carlo value with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub replications: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, Value>,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64, replications: usize) -> Self {
        debug_assert!(std_error >= 0.0 || std_error.is_nan());
        Self { value, std_error, replications: replications.max(1), metadata: BTreeMap::new() }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0, 1)
    }

    /// Mean of the samples with se = sd/sqrt(n).
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = crate::stats::mean(samples);
        let se = if n > 1 { (crate::stats::variance(samples) / n as f64).sqrt() } else { 0.0 };
        Self::new(mean, se, n)
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn flag(&self, key: &str) -> bool {
        self.metadata.get(key).and_then(Value::as_bool).unwrap_or(false)
    }

    /// Number of combined standard errors separating `self` from `other`.
    pub fn z_against(&self, other: &Estimate) -> f64 {
        let se = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        let diff = (self.value - other.value).abs();
        if se == 0.0 {
            if diff == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            diff / se
        }
    }

    pub fn z_against_value(&self, target: f64) -> f64 {
        self.z_against(&Estimate::exact(target))
    }
}
