use serde::{Deserialize, Serialize};

use super::common::Model;
use super::report::{ExperimentReport, Table, Verdict};
use crate::error::{GeoError, Result};
use crate::estimators::empirical_cumulants;
use crate::measures::AlphaRule;
use crate::rng::SeedSpec;
use crate::stats::linear_fit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantTolerances {
    /// Expected log-log slope of k₂ and k₃, checked within `slope_fit_se`.
    #[serde(default)]
    pub expected_slope: Option<f64>,
    #[serde(default = "two")]
    pub slope_fit_se: f64,
    /// Admissible range of the k₂ slope.
    #[serde(default)]
    pub k2_slope_range: Option<[f64; 2]>,
    /// |proxy| at the largest λ must be below |proxy| at the smallest λ
    /// plus this many combined se.
    #[serde(default)]
    pub proxy_allowance_se: Option<f64>,
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantConfig {
    #[serde(flatten)]
    pub model: Model,
    pub lambdas: Vec<f64>,
    pub reps: usize,
    #[serde(default = "quarter")]
    pub alpha: AlphaRule,
    pub tolerances: CumulantTolerances,
}

fn quarter() -> AlphaRule {
    AlphaRule::Power { beta: 0.25 }
}

impl CumulantConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.lambdas.len() < 2 || self.lambdas.windows(2).any(|w| !(w[1] > w[0])) || self.lambdas[0] <= 0.0 {
            return Err(GeoError::InvalidParameter("need at least two increasing positive λ values".into()));
        }
        if self.reps < 8 {
            return Err(GeoError::InsufficientData { needed: 8, got: self.reps });
        }
        Ok(())
    }
}

pub fn cumulant_scaling(cfg: &CumulantConfig, master: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let seed = SeedSpec::new(master);
    let mut report = ExperimentReport::new("cumulants", serde_json::to_value(cfg).unwrap_or_default(), master);
    let mut table = Table::new(&["lambda", "k1", "k1_se", "k2", "k2_se", "k3", "k3_se", "k4", "k4_se", "proxy", "proxy_se"]);
    let mut sets = Vec::new();
    let mut proxies = Vec::new();
    for (i, &lambda) in cfg.lambdas.iter().enumerate() {
        let x = cfg.model.poisson_pairings(lambda, cfg.reps, &seed.child(i as u64))?;
        let c = empirical_cumulants(&x)?;
        let factor = cfg.alpha.alpha(lambda) * lambda.powf(-1.5);
        let proxy = (factor * c.values[2], factor * c.std_errors[2]);
        let mut row = vec![lambda];
        for j in 0..4 {
            row.push(c.values[j]);
            row.push(c.std_errors[j]);
        }
        row.extend([proxy.0, proxy.1]);
        table.push(row);
        report.cell(format!("cumulants_lambda_{lambda}"), &c);
        sets.push(c);
        proxies.push(proxy);
    }
    report.tables.insert("cumulants".into(), table);
    let logl: Vec<f64> = cfg.lambdas.iter().map(|l| l.ln()).collect();
    let mut slopes = Vec::new();
    for order in [2usize, 3] {
        let vals: Vec<f64> = sets.iter().map(|c| c.values[order - 1]).collect();
        if vals.iter().all(|v| *v > 0.0) {
            let fit = linear_fit(&logl, &vals.iter().map(|v| v.ln()).collect::<Vec<_>>());
            report.cell(format!("k{order}_slope"), fit.slope);
            report.cell(format!("k{order}_slope_se"), fit.slope_se);
            slopes.push((order, Some(fit)));
        } else {
            report.cell(format!("k{order}_slope"), "not fitted: non-positive cumulant");
            slopes.push((order, None));
        }
    }
    if let Some(expected) = cfg.tolerances.expected_slope {
        let z = cfg.tolerances.slope_fit_se;
        for (order, fit) in &slopes {
            let (ok, obs) = match fit {
                Some(f) => {
                    let obs = (f.slope - expected).abs() / f.slope_se.max(f64::MIN_POSITIVE);
                    (obs <= z || f.slope == expected, obs)
                }
                None => (false, f64::NAN),
            };
            report.verdict(Verdict::new(format!("k{order}_slope_matches"), ok, obs, "tolerances.slope_fit_se", z));
        }
    }
    if let Some([lo, hi]) = cfg.tolerances.k2_slope_range {
        let (ok, obs) = match &slopes[0].1 {
            Some(f) => (f.slope >= lo && f.slope <= hi, f.slope),
            None => (false, f64::NAN),
        };
        report.verdict(Verdict::new("k2_slope_in_range", ok, obs, "tolerances.k2_slope_range", hi).with_detail(format!("range [{lo}, {hi}]")));
    }
    if let Some(allow) = cfg.tolerances.proxy_allowance_se {
        let (first, last) = (proxies[0], *proxies.last().unwrap());
        let se = (first.1 * first.1 + last.1 * last.1).sqrt();
        let rise = last.0.abs() - first.0.abs();
        let obs = if se > 0.0 { rise / se } else if rise < 0.0 { f64::NEG_INFINITY } else { 0.0 };
        report.verdict(
            Verdict::new("third_order_proxy_shrinks", rise <= allow * se, obs, "tolerances.proxy_allowance_se", allow)
                .with_detail(format!("|proxy| {} -> {}", first.0.abs(), last.0.abs())),
        );
    }
    Ok(report)
}
