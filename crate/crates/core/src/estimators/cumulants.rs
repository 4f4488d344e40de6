//! k-statistics of orders 1 to 4 with leave-one-out jackknife errors.

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::estimate::Estimate;

pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantSet {
    /// k₁..k₄.
    pub values: [f64; 4],
    pub std_errors: [f64; 4],
    pub samples: usize,
}

impl CumulantSet {
    /// The order-j cumulant (1-based) as an Estimate.
    pub fn get(&self, order: usize) -> Estimate {
        assert!((1..=4).contains(&order), "cumulant order must be 1..=4");
        Estimate::new(self.values[order - 1], self.std_errors[order - 1], self.samples)
    }
}

/// k-statistics from power sums of deviations from `c`, sample size n.
fn kstats(n: f64, s1: f64, s2: f64, s3: f64, s4: f64, c: f64) -> [f64; 4] {
    let mu = s1 / n;
    let (a2, a3, a4) = (s2 / n, s3 / n, s4 / n);
    let m2 = (a2 - mu * mu).max(0.0);
    let m3 = a3 - 3.0 * mu * a2 + 2.0 * mu.powi(3);
    let m4 = a4 - 4.0 * mu * a3 + 6.0 * mu * mu * a2 - 3.0 * mu.powi(4);
    let k2 = n / (n - 1.0) * m2;
    let k3 = n * n / ((n - 1.0) * (n - 2.0)) * m3;
    let k4 = n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    [c + mu, k2, k3, k4]
}

pub fn empirical_cumulants(samples: &[f64]) -> Result<CumulantSet> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(GeoError::InsufficientData { needed: MIN_SAMPLES, got: n });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(GeoError::InvalidParameter("samples must be finite".into()));
    }
    let c = samples.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = samples.iter().map(|x| x - c).collect();
    let mut s = [0.0; 4];
    for &e in &dev {
        let e2 = e * e;
        s[0] += e;
        s[1] += e2;
        s[2] += e2 * e;
        s[3] += e2 * e2;
    }
    let nf = n as f64;
    let full = kstats(nf, s[0], s[1], s[2], s[3], c);
    let mut sum = [0.0; 4];
    let mut sum_sq = [0.0; 4];
    for &e in &dev {
        let e2 = e * e;
        let loo = kstats(nf - 1.0, s[0] - e, s[1] - e2, s[2] - e2 * e, s[3] - e2 * e2, c);
        for j in 0..4 {
            sum[j] += loo[j];
            sum_sq[j] += loo[j] * loo[j];
        }
    }
    let mut se = [0.0; 4];
    for j in 0..4 {
        let mean = sum[j] / nf;
        let ss = (sum_sq[j] - nf * mean * mean).max(0.0);
        se[j] = ((nf - 1.0) / nf * ss).sqrt();
    }
    Ok(CumulantSet { values: full, std_errors: se, samples: n })
}
