//! Tabulated V(τ) and δ(τ) with monotone cubic (PCHIP) interpolation.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::estimate::Estimate;

/// Fritsch-Carlson node derivatives.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = (0..n - 1).map(|k| x[k + 1] - x[k]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    if n == 2 {
        m[0] = delta[0];
        m[1] = delta[0];
        return m;
    }
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let edge = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if d.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            d
        }
    };
    m[0] = edge(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

pub(crate) fn pchip_eval(x: &[f64], y: &[f64], t: f64) -> f64 {
    let n = x.len();
    if n == 1 {
        return y[0];
    }
    let m = pchip_slopes(x, y);
    let k = match x.partition_point(|&v| v <= t) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    let h = x[k + 1] - x[k];
    let s = (t - x[k]) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s).powi(2);
    let h10 = s * (1.0 - s).powi(2);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    h00 * y[k] + h10 * h * m[k] + h01 * y[k + 1] + h11 * h * m[k + 1]
}

/// Pointwise estimates on an increasing τ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauTable {
    pub taus: Vec<f64>,
    pub estimates: Vec<Estimate>,
}

impl TauTable {
    pub fn new(taus: Vec<f64>, estimates: Vec<Estimate>) -> Result<Self> {
        if taus.is_empty() || taus.len() != estimates.len() {
            return Err(GeoError::InvalidParameter("τ grid and estimates must be non-empty and aligned".into()));
        }
        if taus.windows(2).any(|w| !(w[1] > w[0])) || taus.iter().any(|t| !(*t > 0.0)) {
            return Err(GeoError::InvalidParameter("τ grid must be positive and strictly increasing".into()));
        }
        if estimates.iter().any(|e| !e.value.is_finite()) {
            return Err(GeoError::InvalidParameter("table values must be finite".into()));
        }
        Ok(Self { taus, estimates })
    }

    pub fn values(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.value).collect()
    }

    fn check_hull(&self, tau: f64) -> Result<()> {
        let (lo, hi) = (self.taus[0], *self.taus.last().unwrap());
        let tol = 1e-12 * hi;
        if tau < lo - tol || tau > hi + tol {
            return Err(GeoError::Extrapolation { value: tau, lo, hi });
        }
        Ok(())
    }

    pub fn interpolate(&self, tau: f64) -> Result<f64> {
        self.check_hull(tau)?;
        Ok(pchip_eval(&self.taus, &self.values(), tau))
    }

    /// Interpolation with node values replaced by `values`.
    pub fn interpolate_with(&self, values: &[f64], tau: f64) -> Result<f64> {
        self.check_hull(tau)?;
        Ok(pchip_eval(&self.taus, values, tau))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,value,se,reps\n");
        for (t, e) in self.taus.iter().zip(&self.estimates) {
            writeln!(out, "{t},{},{},{}", e.value, e.std_error, e.replications).unwrap();
        }
        out
    }
}

/// V(τ) on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VTable(pub TauTable);

impl VTable {
    pub fn new(taus: Vec<f64>, estimates: Vec<Estimate>) -> Result<Self> {
        TauTable::new(taus, estimates).map(Self)
    }

    /// A table holding the same exact value at the given nodes.
    pub fn constant(taus: Vec<f64>, value: f64) -> Result<Self> {
        let est = taus.iter().map(|_| Estimate::exact(value)).collect();
        Self::new(taus, est)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRoute {
    Window,
    Insertion,
}

/// δ(τ) on a grid, labelled with the route that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub table: TauTable,
    pub route: DeltaRoute,
}

impl DeltaTable {
    pub fn new(taus: Vec<f64>, estimates: Vec<Estimate>, route: DeltaRoute) -> Result<Self> {
        Ok(Self { table: TauTable::new(taus, estimates)?, route })
    }
}
