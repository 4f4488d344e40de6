use serde::{Deserialize, Serialize};

use super::common::{calibration_mean, nonincreasing_within, resolve_sigma, Model, TableSource};
use super::report::{ExperimentReport, Table, Verdict};
use crate::error::{GeoError, Result};
use crate::estimators::{empirical_log_laplace, log_laplace::MIN_ESS};
use crate::measures::AlphaRule;
use crate::rng::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLaplaceTolerances {
    /// Final λ must be within this many se of Σ/2.
    #[serde(default)]
    pub final_z: Option<f64>,
    /// Final λ must be within this relative distance of Σ/2.
    #[serde(default)]
    pub final_relative: Option<f64>,
    /// Noise allowance, in se, for the shrinking-deviation trend.
    #[serde(default)]
    pub trend_se: Option<f64>,
    /// A(sf)/A(f) must be within this many se of s².
    #[serde(default)]
    pub scaling_z: Option<f64>,
    /// Smallest importance-sampling effective sample size accepted at any λ.
    #[serde(default = "default_min_ess")]
    pub min_ess: f64,
}

fn default_min_ess() -> f64 {
    MIN_ESS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLaplaceConfig {
    #[serde(flatten)]
    pub model: Model,
    pub lambdas: Vec<f64>,
    pub alpha: AlphaRule,
    pub reps: usize,
    pub calibration_reps: usize,
    pub sigma: TableSource,
    /// Factor s for the quadratic scaling check.
    #[serde(default)]
    pub scaling_factor: Option<f64>,
    pub tolerances: LogLaplaceTolerances,
}

impl LogLaplaceConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.sigma.validate()?;
        if self.lambdas.is_empty() || self.lambdas.windows(2).any(|w| !(w[1] > w[0])) || self.lambdas[0] <= 0.0 {
            return Err(GeoError::InvalidParameter("λ grid must be positive and increasing".into()));
        }
        if let AlphaRule::Power { beta } = self.alpha {
            if !(beta > 0.0 && beta < 0.5) {
                return Err(GeoError::InvalidParameter(format!("β must lie in (0, 1/2), got {beta}")));
            }
        }
        if self.reps < 2 || self.calibration_reps < 2 {
            return Err(GeoError::InsufficientData { needed: 2, got: self.reps.min(self.calibration_reps) });
        }
        Ok(())
    }
}

pub fn log_laplace_convergence(cfg: &LogLaplaceConfig, master: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let seed = SeedSpec::new(master);
    let mut report = ExperimentReport::new("log_laplace", serde_json::to_value(cfg).unwrap_or_default(), master);
    let sigma = resolve_sigma(&cfg.model, &cfg.sigma, &seed.child(0))?;
    let target = sigma.value / 2.0;
    let target_se = sigma.std_error / 2.0;
    report.cell("sigma", &sigma);
    report.cell("target", target);
    let mut table = Table::new(&["lambda", "alpha", "a", "se", "ess", "target"]);
    let mut deviations = Vec::new();
    let mut dev_se = Vec::new();
    let mut last = None;
    let mut unreliable = Vec::new();
    for (k, &lambda) in cfg.lambdas.iter().enumerate() {
        let alpha = cfg.alpha.alpha(lambda);
        let cal = calibration_mean(&cfg.model, lambda, cfg.calibration_reps, &seed.child(1).child(k as u64))?;
        let raw = cfg.model.poisson_pairings(lambda, cfg.reps, &seed.child(2).child(k as u64))?;
        let centered: Vec<f64> = raw.iter().map(|x| x - cal.value).collect();
        let a = empirical_log_laplace(&centered, lambda, alpha, cal.std_error)?;
        let ess = a.metadata.get("ess").and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
        if !(ess >= cfg.tolerances.min_ess) {
            unreliable.push(lambda);
        }
        table.push(vec![lambda, alpha, a.value, a.std_error, ess, target]);
        deviations.push(a.value - target);
        dev_se.push(a.std_error);
        report.cell(format!("a_lambda_{lambda}"), &a);
        last = Some((lambda, alpha, centered, cal, a));
    }
    report.tables.insert("log_laplace".into(), table);
    let (lambda, alpha, centered, cal, a) = last.expect("non-empty grid");
    let se = (a.std_error.powi(2) + target_se.powi(2)).sqrt();
    let dev = (a.value - target).abs();
    if let Some(z) = cfg.tolerances.final_z {
        let obs = if se > 0.0 { dev / se } else if dev == 0.0 { 0.0 } else { f64::INFINITY };
        report.verdict(Verdict::new("final_within_z", obs <= z, obs, "tolerances.final_z", z).with_detail(format!("λ = {lambda}")));
    }
    if let Some(rel) = cfg.tolerances.final_relative {
        let obs = dev / target.abs();
        report.verdict(Verdict::new("final_within_relative", obs <= rel, obs, "tolerances.final_relative", rel).with_detail(format!("λ = {lambda}")));
    }
    if let Some(t) = cfg.tolerances.trend_se {
        let allow: Vec<f64> = dev_se.iter().map(|s| t * s).collect();
        let ok = nonincreasing_within(&deviations, &allow);
        report.verdict(Verdict::new("deviation_trend", ok, f64::from(u8::from(ok)), "tolerances.trend_se", t));
    }
    report.verdict(
        Verdict::new("effective_sample_size", unreliable.is_empty(), unreliable.len() as f64, "tolerances.min_ess", cfg.tolerances.min_ess)
            .with_detail(format!("unreliable at λ = {unreliable:?}")),
    );
    if let (Some(s), Some(z)) = (cfg.scaling_factor, cfg.tolerances.scaling_z) {
        let scaled: Vec<f64> = centered.iter().map(|x| s * x).collect();
        let b = empirical_log_laplace(&scaled, lambda, alpha, s * cal.std_error)?;
        let ratio = b.value / a.value;
        let ratio_se = ratio.abs() * ((b.std_error / b.value).powi(2) + (a.std_error / a.value).powi(2)).sqrt();
        let obs = (ratio - s * s).abs() / ratio_se;
        report.cell("scaling_ratio", ratio);
        report.cell("scaling_ratio_se", ratio_se);
        report.verdict(Verdict::new("quadratic_scaling", obs <= z, obs, "tolerances.scaling_z", z));
    }
    Ok(report)
}
