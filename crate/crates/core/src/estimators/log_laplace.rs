//! Plug-in logarithmic Laplace transform A = α⁻² log E exp(α λ^{-1/2} X).

use crate::error::{GeoError, Result};
use crate::estimate::Estimate;
use crate::stats::log_sum_exp;

/// Below this effective sample size the estimate is flagged unreliable.
pub const MIN_ESS: f64 = 30.0;

/// `centered` holds ⟨f, μ⟩ minus an independently estimated mean whose
/// standard error is `calibration_se`; that error enters through
/// ∂A/∂(mean) = −h/α².
pub fn empirical_log_laplace(centered: &[f64], lambda: f64, alpha: f64, calibration_se: f64) -> Result<Estimate> {
    if centered.len() < 2 {
        return Err(GeoError::InsufficientData { needed: 2, got: centered.len() });
    }
    if !(lambda > 0.0 && alpha > 0.0) {
        return Err(GeoError::InvalidParameter("λ and α must be positive".into()));
    }
    let n = centered.len() as f64;
    let h = alpha / lambda.sqrt();
    let exps: Vec<f64> = centered.iter().map(|x| h * x).collect();
    let log_mean = log_sum_exp(&exps) - n.ln();
    let value = log_mean / (alpha * alpha);
    // Weights normalized by the mean, so w̄ = 1.
    let w: Vec<f64> = exps.iter().map(|e| (e - log_mean).exp()).collect();
    let sum_w2: f64 = w.iter().map(|x| x * x).sum();
    let var_w = (sum_w2 - n) / (n - 1.0);
    let se_log = (var_w.max(0.0) / n).sqrt();
    let se_cal = h * calibration_se;
    let se = (se_log * se_log + se_cal * se_cal).sqrt() / (alpha * alpha);
    let ess = n * n / sum_w2;
    let mut est = Estimate::new(value, se, centered.len())
        .with_meta("lambda", lambda)
        .with_meta("alpha", alpha)
        .with_meta("ess", ess);
    if ess < MIN_ESS {
        est = est.with_meta("unreliable", true);
    }
    Ok(est)
}
