use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, Table, Verdict};
use crate::error::{GeoError, Result};
use crate::gibbs::{sample_tilted_full, tilt_derivative_check_with, GibbsOptions, TiltParams};
use crate::par::try_map_indexed;
use crate::processes::DensitySpec;
use crate::rng::SeedSpec;
use crate::stats::chi_square_poisson;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsTolerances {
    /// Level of the chi-square test of the u = 0 counts.
    pub chi_p: f64,
    /// Allowed |z| in the derivative identities.
    pub derivative_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsCheckConfig {
    #[serde(flatten)]
    pub tilt: TiltParams,
    pub density: DensitySpec,
    pub lambda: f64,
    /// u = 0 samples for the Poisson count test.
    pub count_samples: usize,
    /// Tilted samples (at `tilt.u`) whose sandwich is checked.
    pub sandwich_samples: usize,
    pub u_grid: Vec<f64>,
    pub derivative_reps: usize,
    #[serde(default)]
    pub options: GibbsOptions,
    pub tolerances: GibbsTolerances,
}

impl GibbsCheckConfig {
    pub fn validate(&self) -> Result<()> {
        self.tilt.validate(self.density.dim())?;
        if !(self.lambda > 0.0) {
            return Err(GeoError::InvalidParameter(format!("λ must be positive, got {}", self.lambda)));
        }
        if self.count_samples < 10 || self.derivative_reps < 10 {
            return Err(GeoError::InsufficientData { needed: 10, got: self.count_samples.min(self.derivative_reps) });
        }
        for &u in &self.u_grid {
            self.tilt.with_u(u).validate(self.density.dim())?;
        }
        if !(self.tolerances.chi_p > 0.0 && self.tolerances.chi_p < 1.0) || !(self.tolerances.derivative_z > 0.0) {
            return Err(GeoError::InvalidParameter("chi_p must lie in (0, 1) and derivative_z must be positive".into()));
        }
        Ok(())
    }
}

pub fn gibbs_check(cfg: &GibbsCheckConfig, master: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let seed = SeedSpec::new(master);
    let mut report = ExperimentReport::new("gibbs_check", serde_json::to_value(cfg).unwrap_or_default(), master);
    let opts = &cfg.options;

    let untilted = cfg.tilt.with_u(0.0);
    let counts = try_map_indexed(cfg.count_samples, |r| {
        Ok::<_, GeoError>(sample_tilted_full(&untilted, cfg.lambda, &cfg.density, &seed.child(0).child(r as u64), opts)?.config.len())
    })?;
    let mean = cfg.lambda * cfg.density.integral();
    let chi = chi_square_poisson(&counts, mean);
    report.cell("count_test", chi);
    report.verdict(Verdict::new("untilted_counts_poisson", chi.p_value > cfg.tolerances.chi_p, chi.p_value, "tolerances.chi_p", cfg.tolerances.chi_p));

    let violations: usize = try_map_indexed(cfg.sandwich_samples, |r| {
        let s = sample_tilted_full(&cfg.tilt, cfg.lambda, &cfg.density, &seed.child(1).child(r as u64), opts)?;
        let inside = |small: &crate::processes::PointConfiguration, big: &crate::processes::PointConfiguration| {
            small.points.iter().all(|p| big.index_of(p.id).is_some_and(|j| big.points[j] == *p))
        };
        Ok::<_, GeoError>(usize::from(!(inside(&s.low, &s.config) && inside(&s.config, &s.high))))
    })?
    .into_iter()
    .sum();
    report.verdict(Verdict::new("sandwich_inclusions", violations == 0, violations as f64, "exact", 0.0));

    if !cfg.u_grid.is_empty() {
        let d = tilt_derivative_check_with(&cfg.tilt, &cfg.u_grid, cfg.lambda, &cfg.density, cfg.derivative_reps, &seed.child(2), opts)?;
        let mut table = Table::new(&["u", "first_lhs", "first_se", "first_rhs", "first_rhs_se", "second_lhs", "second_se", "second_rhs", "second_rhs_se"]);
        let tol = cfg.tolerances.derivative_z;
        for row in &d.rows {
            table.push(vec![row.u, row.first_lhs, row.first_se, row.first_rhs, row.first_rhs_se, row.second_lhs, row.second_se, row.second_rhs, row.second_rhs_se]);
            report.verdict(Verdict::new(format!("first_derivative_u_{}", row.u), row.first_z() <= tol, row.first_z(), "tolerances.derivative_z", tol));
            report.verdict(Verdict::new(format!("second_derivative_u_{}", row.u), row.second_z() <= tol, row.second_z(), "tolerances.derivative_z", tol));
        }
        report.cell("untilted_mean", d.untilted_mean);
        report.tables.insert("derivatives".into(), table);
    }
    Ok(report)
}
