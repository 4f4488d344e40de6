use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, Table, Verdict};
use crate::error::{GeoError, Result};
use crate::estimators::{estimate_delta, estimate_v, estimate_v_direct, nn_threshold_delta, DeltaRoute, StationaryConfig, VRoute};
use crate::functionals::{FunctionalKind, FunctionalSpec};
use crate::par::try_map_indexed;
use crate::rng::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectCheck {
    /// Side of the torus used by the direct-variance route.
    pub side: f64,
    pub reps: usize,
    /// Allowed |difference| in combined se.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VTableConfig {
    pub functional: FunctionalSpec,
    pub dim: usize,
    pub taus: Vec<f64>,
    pub half_width: f64,
    pub shell_width: f64,
    pub reps: usize,
    #[serde(default = "palm")]
    pub route: VRoute,
    #[serde(default)]
    pub direct_check: Option<DirectCheck>,
}

fn palm() -> VRoute {
    VRoute::Palm
}

fn check_taus(taus: &[f64]) -> Result<()> {
    if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0)) {
        return Err(GeoError::InvalidParameter("τ grid must be non-empty and positive".into()));
    }
    Ok(())
}

impl VTableConfig {
    pub fn validate(&self) -> Result<()> {
        self.functional.validate()?;
        check_taus(&self.taus)?;
        self.stationary().validate()?;
        if let Some(c) = &self.direct_check {
            if !(c.side > 0.0) || c.reps < 2 || !(c.z > 0.0) {
                return Err(GeoError::InvalidParameter("direct check needs side > 0, reps ≥ 2 and z > 0".into()));
            }
        }
        Ok(())
    }

    fn stationary(&self) -> StationaryConfig {
        StationaryConfig::uniform(self.dim, self.half_width, self.shell_width, self.reps)
    }
}

pub fn v_table(cfg: &VTableConfig, master: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let seed = SeedSpec::new(master);
    let mut report = ExperimentReport::new("v_table", serde_json::to_value(cfg).unwrap_or_default(), master);
    let st = cfg.stationary();
    let mut table = Table::new(&["tau", "v", "v_se", "direct", "direct_se"]);
    let rows = try_map_indexed(cfg.taus.len(), |i| {
        let tau = cfg.taus[i];
        let v = estimate_v(&cfg.functional, tau, &st, cfg.route, &seed.child(0).child(i as u64))?;
        let direct = match &cfg.direct_check {
            Some(c) => Some(estimate_v_direct(&cfg.functional, tau, cfg.dim, c.side, c.reps, &seed.child(1).child(i as u64))?),
            None => None,
        };
        Ok::<_, GeoError>((v, direct))
    })?;
    for (&tau, (v, direct)) in cfg.taus.iter().zip(&rows) {
        let (dv, dse) = direct.as_ref().map_or((f64::NAN, f64::NAN), |e| (e.value, e.std_error));
        table.push(vec![tau, v.value, v.std_error, dv, dse]);
        report.cell(format!("v_tau_{tau}"), v);
        if let (Some(d), Some(c)) = (direct, &cfg.direct_check) {
            let z = v.z_against(d);
            report.cell(format!("direct_tau_{tau}"), d);
            report.verdict(Verdict::new(format!("cross_route_tau_{tau}"), z <= c.z, z, "direct_check.z", c.z));
        }
    }
    report.tables.insert("v_table".into(), table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTableConfig {
    pub functional: FunctionalSpec,
    pub dim: usize,
    pub taus: Vec<f64>,
    pub half_width: f64,
    pub shell_width: f64,
    pub reps: usize,
    #[serde(default = "window")]
    pub route: DeltaRoute,
    /// For NnThreshold, compare with the void-probability closed form
    /// within this many se.
    #[serde(default)]
    pub closed_form_z: Option<f64>,
}

fn window() -> DeltaRoute {
    DeltaRoute::Window
}

impl DeltaTableConfig {
    pub fn validate(&self) -> Result<()> {
        self.functional.validate()?;
        check_taus(&self.taus)?;
        StationaryConfig::uniform(self.dim, self.half_width, self.shell_width, self.reps).validate()?;
        if self.closed_form_z.is_some() && !matches!(self.functional.kind, FunctionalKind::NnThreshold { .. }) {
            return Err(GeoError::InvalidParameter("closed_form_z applies to nn_threshold only".into()));
        }
        Ok(())
    }
}

pub fn delta_table(cfg: &DeltaTableConfig, master: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let seed = SeedSpec::new(master);
    let mut report = ExperimentReport::new("delta_table", serde_json::to_value(cfg).unwrap_or_default(), master);
    let st = StationaryConfig::uniform(cfg.dim, cfg.half_width, cfg.shell_width, cfg.reps);
    let est = try_map_indexed(cfg.taus.len(), |i| estimate_delta(&cfg.functional, cfg.taus[i], cfg.route, &st, &seed.child(i as u64)))?;
    let mut table = Table::new(&["tau", "delta", "delta_se", "closed_form"]);
    for (&tau, e) in cfg.taus.iter().zip(&est) {
        let exact = match cfg.functional.kind {
            FunctionalKind::NnThreshold { t } => Some(nn_threshold_delta(tau, t, cfg.dim)),
            _ => None,
        };
        table.push(vec![tau, e.value, e.std_error, exact.unwrap_or(f64::NAN)]);
        report.cell(format!("delta_tau_{tau}"), e);
        if let (Some(x), Some(z)) = (exact, cfg.closed_form_z) {
            let obs = e.z_against_value(x);
            report.verdict(Verdict::new(format!("closed_form_tau_{tau}"), obs <= z, obs, "closed_form_z", z));
        }
    }
    report.tables.insert("delta_table".into(), table);
    Ok(report)
}
