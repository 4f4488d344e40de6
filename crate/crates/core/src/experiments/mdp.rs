use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::common::{calibration_mean, resolve_sigma, Model, TableSource};
use super::report::{ExperimentReport, Table, Verdict};
use crate::error::{GeoError, Result};
use crate::measures::{center_and_scale, AlphaRule};
use crate::par::map_indexed;
use crate::rng::SeedSpec;
use crate::stats::{log_normal_sf, wilson_interval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpTolerances {
    /// Allowed |K̂(t) − K(t)| / K(t) for model cells.
    pub relative: f64,
    /// Width of the Wilson interval, in normal quantiles.
    #[serde(default = "three")]
    pub wilson_z: f64,
}

fn three() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpConfig {
    #[serde(flatten)]
    pub model: Model,
    pub lambda: f64,
    pub alpha: AlphaRule,
    pub ts: Vec<f64>,
    pub reps: usize,
    pub calibration_reps: usize,
    pub sigma: TableSource,
    pub tolerances: MdpTolerances,
}

impl MdpConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.sigma.validate()?;
        if !(self.lambda > std::f64::consts::E) {
            return Err(GeoError::InvalidParameter(format!("λ must exceed e, got {}", self.lambda)));
        }
        if self.ts.is_empty() || self.ts.iter().any(|t| !(*t >= 0.0)) {
            return Err(GeoError::InvalidParameter("t grid must be non-empty and non-negative".into()));
        }
        if self.reps < 100 || self.calibration_reps < 2 {
            return Err(GeoError::InsufficientData { needed: 100, got: self.reps });
        }
        if !(self.tolerances.relative > 0.0) || !(self.tolerances.wilson_z > 0.0) {
            return Err(GeoError::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// −α^{-2} log of the tail frequency, with the rate interval from the
/// Wilson bounds on the frequency. `None` when nothing exceeded t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCell {
    pub t: f64,
    pub hits: usize,
    pub reps: usize,
    pub rate: Option<f64>,
    pub rate_low: f64,
    pub rate_high: f64,
}

fn tail_cell(sample: &[f64], t: f64, alpha: f64, z: f64) -> TailCell {
    let hits = sample.iter().filter(|&&x| x >= t).count();
    let (plo, phi) = wilson_interval(hits, sample.len(), z);
    let a2 = alpha * alpha;
    let to_rate = |p: f64| if p > 0.0 { -p.ln() / a2 } else { f64::INFINITY };
    TailCell {
        t,
        hits,
        reps: sample.len(),
        rate: (hits > 0).then(|| to_rate(hits as f64 / sample.len() as f64)),
        rate_low: to_rate(phi),
        rate_high: to_rate(plo),
    }
}

/// −α^{-2} log P[N(0, Σ/α²) ≥ t].
fn normal_rate(t: f64, sigma: f64, alpha: f64) -> f64 {
    -log_normal_sf(alpha * t / sigma.sqrt()) / (alpha * alpha)
}

pub fn mdp_tail(cfg: &MdpConfig, master: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let seed = SeedSpec::new(master);
    let mut report = ExperimentReport::new("mdp", serde_json::to_value(cfg).unwrap_or_default(), master);
    let sigma = resolve_sigma(&cfg.model, &cfg.sigma, &seed.child(0))?;
    if !(sigma.value > 0.0) {
        return Err(GeoError::InvalidParameter(format!("Σ must be positive, got {}", sigma.value)));
    }
    report.cell("sigma", &sigma);
    let alpha = cfg.alpha.alpha(cfg.lambda);
    report.cell("alpha", alpha);
    let z = cfg.tolerances.wilson_z;
    let rate_k = |t: f64| t * t / (2.0 * sigma.value);

    let control_seed = seed.child(1);
    let sd = (sigma.value).sqrt() / alpha;
    let control: Vec<f64> = map_indexed(cfg.reps, |r| {
        let g: f64 = StandardNormal.sample(&mut control_seed.child(r as u64).rng());
        sd * g
    });
    let mut table = Table::new(&["t", "source", "hits", "rate", "rate_low", "rate_high", "k", "relative"]);
    let mut control_ok = true;
    let mut control_checked = 0;
    for &t in cfg.ts.iter().filter(|t| **t > 0.0) {
        let c = tail_cell(&control, t, alpha, z);
        let exact = normal_rate(t, sigma.value, alpha);
        let k = rate_k(t);
        let implied = (exact - k).abs() / k;
        table.push(vec![t, 0.0, c.hits as f64, c.rate.unwrap_or(f64::NAN), c.rate_low, c.rate_high, k, c.rate.map_or(f64::NAN, |r| (r - k) / k)]);
        report.cell(format!("control_t_{t}"), serde_json::json!({ "cell": c, "normal_rate": exact, "implied_relative_tolerance": implied }));
        if c.rate.is_some() {
            control_checked += 1;
            let inside = exact >= c.rate_low && exact <= c.rate_high;
            control_ok &= inside;
            report.verdict(
                Verdict::new(format!("control_t_{t}"), inside, exact, "tolerances.wilson_z", z)
                    .with_detail(format!("normal rate {exact} vs interval [{}, {}]", c.rate_low, c.rate_high)),
            );
        }
    }
    let gate = control_ok && control_checked > 0;
    report.verdict(Verdict::new("control_gate", gate, control_checked as f64, "tolerances.wilson_z", z));
    if !gate {
        report.tables.insert("mdp".into(), table);
        report.cell("model", "skipped: the Gaussian control did not pass");
        return Ok(report);
    }

    let cal = calibration_mean(&cfg.model, cfg.lambda, cfg.calibration_reps, &seed.child(2))?;
    report.cell("calibration_mean", &cal);
    let raw = cfg.model.poisson_pairings(cfg.lambda, cfg.reps, &seed.child(3))?;
    let scaled = center_and_scale(&raw, cal.value, cfg.lambda, alpha)?;
    for &t in &cfg.ts {
        let c = tail_cell(&scaled, t, alpha, z);
        let k = rate_k(t);
        let relative = if t > 0.0 { c.rate.map(|r| (r - k).abs() / k) } else { None };
        table.push(vec![t, 1.0, c.hits as f64, c.rate.unwrap_or(f64::NAN), c.rate_low, c.rate_high, k, relative.unwrap_or(f64::NAN)]);
        let status = match (t > 0.0, c.rate) {
            (false, _) => "median cell: the rate here is the centring artifact α^{-2} log 2, not a test",
            (true, None) => "unestimable: no sample reached t",
            (true, Some(_)) => "estimated",
        };
        report.cell(format!("model_t_{t}"), serde_json::json!({ "cell": c, "k": k, "relative": relative, "status": status }));
        if let Some(rel) = relative {
            let tol = cfg.tolerances.relative;
            report.verdict(Verdict::new(format!("model_t_{t}"), rel <= tol, rel, "tolerances.relative", tol));
        }
    }
    report.tables.insert("mdp".into(), table);
    Ok(report)
}
