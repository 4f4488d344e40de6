use serde::{Deserialize, Serialize};

use super::common::{mean_and_se, resolve_gamma, Model, TableSource};
use super::report::{ExperimentReport, Table, Verdict};
use crate::error::{GeoError, Result};
use crate::measures::AlphaRule;
use crate::par::{map_indexed, try_map_indexed};
use crate::processes::{sample_binomial, sample_poisson_count, PointConfiguration};
use crate::rng::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepoissonizeTolerances {
    /// E[D²] at the largest n must be below the value at the smallest n
    /// plus this many combined se.
    #[serde(default)]
    pub trend_se: Option<f64>,
    /// Require D = 0 exactly in every replicate.
    #[serde(default)]
    pub exact_zero: bool,
    /// Fraction of classical-LIL paths whose running max stays in [0, 2√2].
    #[serde(default)]
    pub classical_coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepoissonizeConfig {
    #[serde(flatten)]
    pub model: Model,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub gamma: TableSource,
    /// Paths for the classical-LIL calibration on Poisson(1) sums.
    #[serde(default = "hundred")]
    pub classical_paths: usize,
    /// The classical paths run over n = 2^j for j in this inclusive range.
    #[serde(default = "dyadic")]
    pub classical_range: [u32; 2],
    pub tolerances: DepoissonizeTolerances,
}

fn hundred() -> usize {
    100
}

fn dyadic() -> [u32; 2] {
    [4, 20]
}

impl DepoissonizeConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.gamma.validate()?;
        if self.ns.is_empty() || self.ns.windows(2).any(|w| w[1] <= w[0]) || self.ns[0] == 0 {
            return Err(GeoError::InvalidParameter("n grid must be positive and increasing".into()));
        }
        if self.reps < 2 {
            return Err(GeoError::InsufficientData { needed: 2, got: self.reps });
        }
        let [lo, hi] = self.classical_range;
        if lo < 2 || hi < lo || hi > 40 {
            return Err(GeoError::InvalidParameter("classical range must satisfy 2 <= lo <= hi <= 40".into()));
        }
        Ok(())
    }
}

fn prefix(c: &PointConfiguration, n: usize) -> PointConfiguration {
    PointConfiguration::unchecked(c.window, c.points[..n].to_vec()).with_label(n as f64)
}

/// n^{-1/2}(⟨f, μ_N⟩ − ⟨f, ρ_n⟩ − γ(N − n)) on one shared i.i.d. sequence.
fn discrepancy(model: &Model, n: usize, gamma: f64, seed: &SeedSpec) -> Result<f64> {
    let big_n = sample_poisson_count(n as f64, &mut seed.child(3).rng());
    let all = sample_binomial(n.max(big_n).max(1), &model.density, &seed.child(0))?;
    let all = model.attach(&all, &seed.child(1), false)?;
    let lambda = n as f64;
    let binom = model.pairing(&prefix(&all, n), lambda, &seed.child(2))?;
    let pois = model.pairing(&prefix(&all, big_n), lambda, &seed.child(2))?;
    Ok((pois - binom - gamma * (big_n as f64 - n as f64)) / lambda.sqrt())
}

/// Running max of α_n^{-1} n^{-1/2}(S_n − n) over dyadic n, S a sum of
/// Poisson(1) variables, started at 0.
fn classical_running_max(range: [u32; 2], seed: &SeedSpec) -> f64 {
    let mut rng = seed.rng();
    let mut s = 0usize;
    let mut n = 0usize;
    let mut best = 0.0f64;
    for j in 1..=range[1] {
        let next = 1usize << j;
        s += sample_poisson_count((next - n) as f64, &mut rng);
        n = next;
        if j >= range[0] {
            let nf = n as f64;
            best = best.max((s as f64 - nf) / (AlphaRule::LogLog.alpha(nf) * nf.sqrt()));
        }
    }
    best
}

pub fn depoissonization(cfg: &DepoissonizeConfig, master: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let seed = SeedSpec::new(master);
    let mut report = ExperimentReport::new("depoissonize", serde_json::to_value(cfg).unwrap_or_default(), master);
    let gamma = resolve_gamma(&cfg.model, &cfg.gamma, &seed.child(0))?;
    report.cell("gamma", &gamma);
    let mut table = Table::new(&["n", "mean_sq", "mean_sq_se", "max_abs"]);
    let mut stats = Vec::new();
    let mut all_zero = true;
    for (i, &n) in cfg.ns.iter().enumerate() {
        let d = try_map_indexed(cfg.reps, |r| discrepancy(&cfg.model, n, gamma.value, &seed.child(1).child(i as u64).child(r as u64)))?;
        let sq: Vec<f64> = d.iter().map(|x| x * x).collect();
        let (m, se) = mean_and_se(&sq);
        let max_abs = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        all_zero &= max_abs == 0.0;
        table.push(vec![n as f64, m, se, max_abs]);
        stats.push((m, se));
    }
    report.tables.insert("discrepancy".into(), table);
    if let Some(allow) = cfg.tolerances.trend_se {
        let (first, last) = (stats[0], *stats.last().unwrap());
        let se = (first.1 * first.1 + last.1 * last.1).sqrt();
        let rise = last.0 - first.0;
        let obs = if se > 0.0 { rise / se } else if rise < 0.0 { f64::NEG_INFINITY } else { 0.0 };
        report.verdict(
            Verdict::new("discrepancy_shrinks", rise <= allow * se, obs, "tolerances.trend_se", allow)
                .with_detail(format!("E[D²] {} -> {}", first.0, last.0)),
        );
    }
    if cfg.tolerances.exact_zero {
        report.verdict(Verdict::new("discrepancy_identically_zero", all_zero, f64::from(u8::from(!all_zero)), "tolerances.exact_zero", 0.0));
    }
    if let Some(cov) = cfg.tolerances.classical_coverage {
        let upper = 2.0 * std::f64::consts::SQRT_2;
        let maxima = map_indexed(cfg.classical_paths, |p| classical_running_max(cfg.classical_range, &seed.child(2).child(p as u64)));
        let inside = maxima.iter().filter(|m| **m >= 0.0 && **m <= upper).count();
        let frac = inside as f64 / cfg.classical_paths.max(1) as f64;
        report.cell("classical_running_max", &maxima);
        report.verdict(
            Verdict::new("classical_lil_bounded", frac >= cov, frac, "tolerances.classical_coverage", cov)
                .with_detail(format!("running max within [0, {upper}]")),
        );
    }
    Ok(report)
}
