//! Derivatives of the empirical log-MGF of ⟨f, μ⟩ against moments of the
//! tilted process: ∂_h log E e^{h⟨f,μ⟩} at h = u is the tilted mean and the
//! second derivative is the tilted variance.

use serde::{Deserialize, Serialize};

use super::{sample_tilted_full, tilt_statistic, GibbsOptions, TiltParams};
use crate::error::{GeoError, Result};
use crate::par::try_map_indexed;
use crate::processes::{attach_marks, sample_inhomogeneous_poisson, DensitySpec};
use crate::rng::SeedSpec;
use crate::stats;

/// Step of the central differences.
const STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeRow {
    pub u: f64,
    /// Central difference of the log-MGF of the centred untilted samples.
    pub first_centered: f64,
    pub first_lhs: f64,
    pub first_se: f64,
    /// Mean under the tilted sampler.
    pub first_rhs: f64,
    pub first_rhs_se: f64,
    pub second_lhs: f64,
    pub second_se: f64,
    /// Variance under the tilted sampler.
    pub second_rhs: f64,
    pub second_rhs_se: f64,
}

impl DerivativeRow {
    pub fn first_z(&self) -> f64 {
        z(self.first_lhs - self.first_rhs, self.first_se, self.first_rhs_se)
    }

    pub fn second_z(&self) -> f64 {
        z(self.second_lhs - self.second_rhs, self.second_se, self.second_rhs_se)
    }
}

fn z(diff: f64, a: f64, b: f64) -> f64 {
    let se = (a * a + b * b).sqrt();
    if se == 0.0 {
        if diff == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        diff.abs() / se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub lambda: f64,
    pub reps: usize,
    pub untilted_mean: f64,
    pub rows: Vec<DerivativeRow>,
}

fn log_mgf(x: &[f64], h: f64) -> f64 {
    let e: Vec<f64> = x.iter().map(|v| h * v).collect();
    stats::log_sum_exp(&e) - (x.len() as f64).ln()
}

/// Self-normalized exponential weights at h.
fn weights(x: &[f64], h: f64) -> Vec<f64> {
    let l = log_mgf(x, h);
    x.iter().map(|v| (h * v - l).exp() / x.len() as f64).collect()
}

pub fn tilt_derivative_check(
    tilt: &TiltParams,
    u_grid: &[f64],
    lambda: f64,
    kappa: &DensitySpec,
    reps: usize,
    seed: &SeedSpec,
) -> Result<DerivativeReport> {
    tilt_derivative_check_with(tilt, u_grid, lambda, kappa, reps, seed, &GibbsOptions::default())
}

pub fn tilt_derivative_check_with(
    tilt: &TiltParams,
    u_grid: &[f64],
    lambda: f64,
    kappa: &DensitySpec,
    reps: usize,
    seed: &SeedSpec,
    opts: &GibbsOptions,
) -> Result<DerivativeReport> {
    if reps < 10 {
        return Err(GeoError::InsufficientData { needed: 10, got: reps });
    }
    tilt.validate(kappa.dim())?;
    let plan = tilt.functional.mark_plan();
    let base: Vec<f64> = try_map_indexed(reps, |r| {
        let s = seed.child(0).child(r as u64);
        let mut c = sample_inhomogeneous_poisson(lambda, kappa, &s.child(0))?;
        if tilt.functional.needs_marks() {
            c = attach_marks(&c, &plan, &s.child(1))?;
        }
        tilt_statistic(tilt, &c, lambda, opts)
    })?;
    let m = stats::mean(&base);
    let centered: Vec<f64> = base.iter().map(|v| v - m).collect();
    let mut rows = Vec::with_capacity(u_grid.len());
    for (k, &u) in u_grid.iter().enumerate() {
        let t = tilt.with_u(u);
        t.validate(kappa.dim())?;
        let (lp, l0, lm) = (log_mgf(&centered, u + STEP), log_mgf(&centered, u), log_mgf(&centered, u - STEP));
        let first_centered = (lp - lm) / (2.0 * STEP);
        let second = (lp - 2.0 * l0 + lm) / (STEP * STEP);
        let w = weights(&centered, u);
        let wm: f64 = w.iter().zip(&centered).map(|(a, x)| a * x).sum();
        let wv: f64 = w.iter().zip(&centered).map(|(a, x)| a * (x - wm).powi(2)).sum();
        let first_se = w.iter().zip(&centered).map(|(a, x)| (a * (x - wm)).powi(2)).sum::<f64>().sqrt();
        let second_se = w.iter().zip(&centered).map(|(a, x)| (a * ((x - wm).powi(2) - wv)).powi(2)).sum::<f64>().sqrt();
        let tilted: Vec<f64> = try_map_indexed(reps, |r| {
            let s = seed.child(1 + k as u64).child(r as u64);
            let sample = sample_tilted_full(&t, lambda, kappa, &s, opts)?;
            tilt_statistic(&t, &sample.config, lambda, opts)
        })?;
        let n = tilted.len() as f64;
        rows.push(DerivativeRow {
            u,
            first_centered,
            first_lhs: first_centered + m,
            first_se,
            first_rhs: stats::mean(&tilted),
            first_rhs_se: (stats::variance(&tilted) / n).sqrt(),
            second_lhs: second,
            second_se,
            second_rhs: stats::variance(&tilted),
            second_rhs_se: stats::variance_se(&tilted),
        });
    }
    Ok(DerivativeReport { lambda, reps, untilted_mean: m, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::FunctionalSpec;
    use crate::measures::TestFunction;

    #[test]
    fn identities_hold_for_nn_threshold() {
        let tilt = TiltParams::new(0.0, TestFunction::one(), FunctionalSpec::nn_threshold(0.5));
        let k = DensitySpec::uniform(1);
        let r = tilt_derivative_check(&tilt, &[0.0, 0.2], 30.0, &k, 600, &SeedSpec::new(5)).unwrap();
        assert!(r.rows[0].first_centered.abs() < 1e-4);
        for row in &r.rows {
            assert!(row.first_z() < 4.0, "{row:?}");
            assert!(row.second_z() < 4.0, "{row:?}");
        }
    }
}
