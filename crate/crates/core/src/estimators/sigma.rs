//! Quadratures of the limiting variances built from V and δ tables.

use super::quadrature::{integrate, Quadrature};
use super::tables::{DeltaTable, TauTable, VTable};
use crate::error::Result;
use crate::estimate::Estimate;
use crate::measures::TestFunction;
use crate::processes::DensitySpec;

/// ∫ g(x) T(κ(x)) κ(x) dx for a tabulated T, with the table standard errors
/// propagated node by node.
fn table_quadrature<G: Fn(&crate::geometry::Position) -> f64>(
    g: G,
    kappa: &DensitySpec,
    table: &TauTable,
    rule: &Quadrature,
) -> Result<Estimate> {
    let d = kappa.dim();
    let values = table.values();
    let eval = |vals: &[f64]| {
        integrate(
            |x| {
                let k = kappa.eval(x);
                Ok(g(x) * table.interpolate_with(vals, k)? * k)
            },
            d,
            rule,
        )
    };
    let base = eval(&values)?;
    let mut var = 0.0;
    for (j, e) in table.estimates.iter().enumerate() {
        if e.std_error > 0.0 {
            let mut bumped = values.clone();
            bumped[j] += e.std_error;
            var += (eval(&bumped)? - base).powi(2);
        }
    }
    let reps = table.estimates.iter().map(|e| e.replications).min().unwrap_or(1);
    Ok(Estimate::new(base, var.sqrt(), reps))
}

/// Σ = ∫ f² V(κ) κ dx.
pub fn estimate_sigma_limit(f: &TestFunction, kappa: &DensitySpec, vtable: &VTable, rule: &Quadrature) -> Result<Estimate> {
    let d = kappa.dim();
    table_quadrature(|x| f.eval(x, d).powi(2), kappa, &vtable.0, rule)
}

/// γ = ∫ f δ(κ) κ dx.
pub fn estimate_gamma(f: &TestFunction, kappa: &DensitySpec, dtable: &DeltaTable, rule: &Quadrature) -> Result<Estimate> {
    let d = kappa.dim();
    table_quadrature(|x| f.eval(x, d), kappa, &dtable.table, rule)
}

/// σ² = ∫ f² V(κ) κ − (∫ f δ(κ) κ)², clamped at zero.
pub fn estimate_sigma2_binomial(
    f: &TestFunction,
    kappa: &DensitySpec,
    vtable: &VTable,
    dtable: &DeltaTable,
    rule: &Quadrature,
) -> Result<Estimate> {
    let sigma = estimate_sigma_limit(f, kappa, vtable, rule)?;
    let gamma = estimate_gamma(f, kappa, dtable, rule)?;
    let raw = sigma.value - gamma.value.powi(2);
    let se = (sigma.std_error.powi(2) + (2.0 * gamma.value * gamma.std_error).powi(2)).sqrt();
    let reps = sigma.replications.min(gamma.replications);
    let mut out = Estimate::new(raw.max(0.0), se, reps)
        .with_meta("sigma_limit", sigma.value)
        .with_meta("gamma", gamma.value);
    if raw < 0.0 {
        out = out.with_meta("clamped_negative", true);
    }
    Ok(out)
}
