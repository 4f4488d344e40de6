use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, Table, Verdict};
use crate::error::{GeoError, Result};
use crate::functionals::{score_configuration, FunctionalSpec};
use crate::par::try_map_indexed;
use crate::processes::{attach_marks, sample_inhomogeneous_poisson, DensitySpec};
use crate::rng::SeedSpec;
use crate::stats::{self, linear_fit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingTolerances {
    /// Every covariance must be within this many se of zero.
    #[serde(default)]
    pub zero_z: Option<f64>,
    /// The fitted slope of ln|cov| against separation must be negative at
    /// this one-sided level.
    #[serde(default)]
    pub slope_p: Option<f64>,
    /// The covariance at the largest separation must be within this many
    /// se of zero.
    #[serde(default)]
    pub far_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingConfig {
    pub functional: FunctionalSpec,
    pub density: DensitySpec,
    pub lambda: f64,
    /// Side of the two boxes along the separation axis.
    pub box_side: f64,
    pub separations: Vec<f64>,
    pub reps: usize,
    pub tolerances: MixingTolerances,
}

impl MixingConfig {
    pub fn validate(&self) -> Result<()> {
        self.functional.validate()?;
        if !(self.lambda > 0.0) || !(self.box_side > 0.0) {
            return Err(GeoError::InvalidParameter("λ and box_side must be positive".into()));
        }
        if self.separations.is_empty() || self.separations.iter().any(|s| !(*s >= 0.0)) {
            return Err(GeoError::InvalidParameter("separations must be non-empty and non-negative".into()));
        }
        let widest = self.separations.iter().fold(0.0f64, |a, &b| a.max(b));
        if widest + 2.0 * self.box_side > 1.0 {
            return Err(GeoError::InvalidParameter("boxes at the widest separation leave the unit cube".into()));
        }
        if self.reps < 10 {
            return Err(GeoError::InsufficientData { needed: 10, got: self.reps });
        }
        Ok(())
    }

    /// Boxes [c − s/2 − L, c − s/2] and [c + s/2, c + s/2 + L] along axis 0,
    /// full range on the other axes.
    fn boxes(&self, s: f64) -> ((f64, f64), (f64, f64)) {
        let c = 0.5;
        ((c - s / 2.0 - self.box_side, c - s / 2.0), (c + s / 2.0, c + s / 2.0 + self.box_side))
    }
}

/// Covariance of paired samples with a delta-method standard error.
fn cov_with_se(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (stats::mean(x), stats::mean(y));
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let c = prods.iter().sum::<f64>() / (n - 1.0);
    (c, (stats::variance(&prods) / n).sqrt())
}

pub fn mixing_decay(cfg: &MixingConfig, master: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let seed = SeedSpec::new(master);
    let mut report = ExperimentReport::new("mixing", serde_json::to_value(cfg).unwrap_or_default(), master);
    let boxes: Vec<_> = cfg.separations.iter().map(|&s| cfg.boxes(s)).collect();
    let masses = try_map_indexed(cfg.reps, |r| {
        let s = seed.child(r as u64);
        let mut c = sample_inhomogeneous_poisson(cfg.lambda, &cfg.density, &s.child(0))?;
        if cfg.functional.needs_marks() {
            c = attach_marks(&c, &cfg.functional.mark_plan(), &s.child(1))?;
        }
        let scores = score_configuration(&cfg.functional, &c, cfg.lambda, &s.child(2))?;
        let mass = |(lo, hi): (f64, f64)| -> f64 {
            c.points.iter().zip(&scores.scores).filter(|(p, _)| p.position[0] >= lo && p.position[0] < hi).map(|(_, w)| w).sum()
        };
        Ok::<_, GeoError>(boxes.iter().map(|&(a, b)| (mass(a), mass(b))).collect::<Vec<_>>())
    })?;
    let mut table = Table::new(&["separation", "cov", "cov_se", "event_cov", "event_se"]);
    let mut covs = Vec::new();
    for (j, &s) in cfg.separations.iter().enumerate() {
        let a: Vec<f64> = masses.iter().map(|m| m[j].0).collect();
        let b: Vec<f64> = masses.iter().map(|m| m[j].1).collect();
        let (c, se) = cov_with_se(&a, &b);
        let ta = median(&a);
        let tb = median(&b);
        let ea: Vec<f64> = a.iter().map(|v| f64::from(u8::from(*v > ta))).collect();
        let eb: Vec<f64> = b.iter().map(|v| f64::from(u8::from(*v > tb))).collect();
        let (ec, ese) = cov_with_se(&ea, &eb);
        table.push(vec![s, c, se, ec, ese]);
        covs.push((s, c, se));
    }
    report.tables.insert("mixing".into(), table);
    let z = |c: f64, se: f64| if se > 0.0 { c.abs() / se } else if c == 0.0 { 0.0 } else { f64::INFINITY };
    if let Some(tol) = cfg.tolerances.zero_z {
        let worst = covs.iter().map(|&(_, c, se)| z(c, se)).fold(0.0, f64::max);
        report.verdict(Verdict::new("covariance_zero", worst <= tol, worst, "tolerances.zero_z", tol));
    }
    if let Some(tol) = cfg.tolerances.slope_p {
        let usable: Vec<_> = covs.iter().filter(|&&(_, c, se)| c.abs() > 2.0 * se).collect();
        report.cell("fitted_separations", usable.iter().map(|u| u.0).collect::<Vec<_>>());
        if usable.len() >= 3 {
            let xs: Vec<f64> = usable.iter().map(|u| u.0).collect();
            let ys: Vec<f64> = usable.iter().map(|u| u.1.abs().ln()).collect();
            let fit = linear_fit(&xs, &ys);
            report.cell("decay_fit", fit);
            report.verdict(Verdict::new("decay_slope_negative", fit.p_negative < tol, fit.p_negative, "tolerances.slope_p", tol));
        } else {
            report.verdict(
                Verdict::new("decay_slope_negative", false, f64::NAN, "tolerances.slope_p", tol)
                    .with_detail(format!("only {} separations have |cov| > 2 se", usable.len())),
            );
        }
    }
    if let Some(tol) = cfg.tolerances.far_z {
        let &(s, c, se) = covs.iter().max_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty grid");
        let obs = z(c, se);
        report.verdict(Verdict::new("far_covariance_zero", obs <= tol, obs, "tolerances.far_z", tol).with_detail(format!("separation {s}")));
    }
    Ok(report)
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}
