//! Sampling and calibration shared by the drivers.

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::estimate::Estimate;
use crate::estimators::{
    closed_form_v, estimate_delta, estimate_gamma, estimate_sigma_limit, estimate_v, DeltaRoute, DeltaTable, Quadrature,
    StationaryConfig, VRoute, VTable,
};
use crate::functionals::{score_configuration, FunctionalSpec};
use crate::measures::TestFunction;
use crate::par::try_map_indexed;
use crate::processes::{attach_marks, sample_inhomogeneous_poisson, DensitySpec, MarkPlan, PointConfiguration};
use crate::rng::SeedSpec;
use crate::stats;

/// Which functional, density and test function an experiment looks at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub functional: FunctionalSpec,
    pub density: DensitySpec,
    pub test_function: TestFunction,
}

impl Model {
    pub fn dim(&self) -> usize {
        self.density.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.functional.validate()?;
        self.test_function.validate(self.dim())
    }

    /// Marks that the configuration does not carry yet.
    pub fn attach(&self, config: &PointConfiguration, seed: &SeedSpec, keep_times: bool) -> Result<PointConfiguration> {
        if !self.functional.needs_marks() {
            return Ok(config.clone());
        }
        let mut plan: MarkPlan = self.functional.mark_plan();
        if keep_times {
            plan.times = false;
        }
        attach_marks(config, &plan, seed)
    }

    /// ⟨f, μ^ξ_λ(X)⟩ for a marked configuration.
    pub fn pairing(&self, config: &PointConfiguration, lambda: f64, seed: &SeedSpec) -> Result<f64> {
        self.pairing_with(&self.test_function, config, lambda, seed)
    }

    pub fn pairing_with(&self, f: &TestFunction, config: &PointConfiguration, lambda: f64, seed: &SeedSpec) -> Result<f64> {
        if config.is_empty() {
            return Ok(0.0);
        }
        let s = score_configuration(&self.functional, config, lambda, seed)?;
        let d = self.dim();
        Ok(config.points.iter().zip(&s.scores).map(|(p, w)| w * f.eval(&p.position, d)).sum())
    }

    /// ⟨f, μ^ξ_{λκ}⟩ for a fresh Poisson sample.
    pub fn poisson_pairing(&self, lambda: f64, seed: &SeedSpec) -> Result<f64> {
        let c = sample_inhomogeneous_poisson(lambda, &self.density, &seed.child(0))?;
        let c = self.attach(&c, &seed.child(1), false)?;
        self.pairing(&c, lambda, &seed.child(2))
    }

    /// `reps` independent pairings on sub-streams of `seed`.
    pub fn poisson_pairings(&self, lambda: f64, reps: usize, seed: &SeedSpec) -> Result<Vec<f64>> {
        try_map_indexed(reps, |r| self.poisson_pairing(lambda, &seed.child(r as u64)))
    }
}

/// Independent estimate of E⟨f, μ⟩ used for centring.
pub fn calibration_mean(model: &Model, lambda: f64, reps: usize, seed: &SeedSpec) -> Result<Estimate> {
    if reps < 2 {
        return Err(GeoError::InsufficientData { needed: 2, got: reps });
    }
    Ok(Estimate::from_samples(&model.poisson_pairings(lambda, reps, seed)?))
}

/// Where Σ or γ come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TableSource {
    /// A known value of the integral itself.
    Exact { value: f64 },
    /// Estimate V or δ at each τ, then integrate against κ.
    Estimated {
        taus: Vec<f64>,
        half_width: f64,
        shell_width: f64,
        reps: usize,
    },
}

impl TableSource {
    pub fn validate(&self) -> Result<()> {
        match self {
            TableSource::Exact { value } if value.is_finite() => Ok(()),
            TableSource::Exact { .. } => Err(GeoError::InvalidParameter("exact value must be finite".into())),
            TableSource::Estimated { taus, half_width, shell_width, reps } => {
                if taus.is_empty() || !(*half_width > 0.0) || !(*shell_width > 0.0) || *reps < 10 {
                    return Err(GeoError::InvalidParameter("estimated table needs τ values, S > 0, shell width > 0 and reps ≥ 10".into()));
                }
                Ok(())
            }
        }
    }

    fn stationary(&self, d: usize) -> Option<(Vec<f64>, StationaryConfig)> {
        match self {
            TableSource::Estimated { taus, half_width, shell_width, reps } => {
                Some((taus.clone(), StationaryConfig::uniform(d, *half_width, *shell_width, *reps)))
            }
            TableSource::Exact { .. } => None,
        }
    }
}

pub fn build_v_table(model: &Model, taus: &[f64], cfg: &StationaryConfig, seed: &SeedSpec) -> Result<VTable> {
    if let Some(v) = closed_form_v(&model.functional) {
        return VTable::constant(taus.to_vec(), v);
    }
    let est = taus
        .iter()
        .enumerate()
        .map(|(i, &t)| estimate_v(&model.functional, t, cfg, VRoute::Palm, &seed.child(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    VTable::new(taus.to_vec(), est)
}

pub fn build_delta_table(model: &Model, taus: &[f64], cfg: &StationaryConfig, route: DeltaRoute, seed: &SeedSpec) -> Result<DeltaTable> {
    let est = taus
        .iter()
        .enumerate()
        .map(|(i, &t)| estimate_delta(&model.functional, t, route, cfg, &seed.child(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    DeltaTable::new(taus.to_vec(), est, route)
}

/// Σ = ∫ f² V(κ) κ dx.
pub fn resolve_sigma(model: &Model, source: &TableSource, seed: &SeedSpec) -> Result<Estimate> {
    match source.stationary(model.dim()) {
        None => match source {
            TableSource::Exact { value } => Ok(Estimate::exact(*value)),
            TableSource::Estimated { .. } => unreachable!(),
        },
        Some((taus, cfg)) => {
            let table = build_v_table(model, &taus, &cfg, seed)?;
            estimate_sigma_limit(&model.test_function, &model.density, &table, &Quadrature::default())
        }
    }
}

/// γ = ∫ f δ(κ) κ dx.
pub fn resolve_gamma(model: &Model, source: &TableSource, seed: &SeedSpec) -> Result<Estimate> {
    match source.stationary(model.dim()) {
        None => match source {
            TableSource::Exact { value } => Ok(Estimate::exact(*value)),
            TableSource::Estimated { .. } => unreachable!(),
        },
        Some((taus, cfg)) => {
            let table = build_delta_table(model, &taus, &cfg, DeltaRoute::Window, seed)?;
            estimate_gamma(&model.test_function, &model.density, &table, &Quadrature::default())
        }
    }
}

/// Relative size of the change between consecutive values, used for
/// trend checks: true when each |x_{k+1}| ≤ |x_k| + allowance_k.
pub fn nonincreasing_within(values: &[f64], allowance: &[f64]) -> bool {
    values.windows(2).zip(allowance.windows(2)).all(|(v, a)| v[1].abs() <= v[0].abs() + (a[0] * a[0] + a[1] * a[1]).sqrt())
}

pub fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    (stats::mean(x), if x.len() > 1 { (stats::variance(x) / n).sqrt() } else { 0.0 })
}
