use serde::{Deserialize, Serialize};

use super::PointConfiguration;
use crate::error::{GeoError, Result};
use crate::rng::{counter_uniform, SeedSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkDist {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
    /// Unbounded; accepted by the type but rejected wherever a bounded mark
    /// is required.
    Exponential { rate: f64 },
}

impl MarkDist {
    pub fn validate(&self, name: &str) -> Result<()> {
        let bad = |msg: String| Err(GeoError::InvalidParameter(format!("{name}: {msg}")));
        match *self {
            MarkDist::Constant { value } if !(value > 0.0) || !value.is_finite() => {
                bad(format!("constant must be positive, got {value}"))
            }
            MarkDist::Uniform { low, high } if !(low > 0.0 && high >= low && high.is_finite()) => {
                bad(format!("need 0 < low <= high, got [{low}, {high}]"))
            }
            MarkDist::Exponential { .. } => bad("distribution must be bounded".into()),
            _ => Ok(()),
        }
    }

    pub fn lower(&self) -> f64 {
        match *self {
            MarkDist::Constant { value } => value,
            MarkDist::Uniform { low, .. } => low,
            MarkDist::Exponential { .. } => 0.0,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            MarkDist::Constant { value } => value,
            MarkDist::Uniform { high, .. } => high,
            MarkDist::Exponential { .. } => f64::INFINITY,
        }
    }

    /// Inverse-cdf transform of a uniform.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            MarkDist::Constant { value } => value,
            MarkDist::Uniform { low, high } => low + (high - low) * u,
            MarkDist::Exponential { rate } => -(1.0 - u).ln() / rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MarkPlan {
    #[serde(default)]
    pub times: bool,
    #[serde(default)]
    pub grain_radius: Option<MarkDist>,
    #[serde(default)]
    pub growth_speed: Option<MarkDist>,
    /// Declared cap on grain radii; the radius distribution must respect it.
    #[serde(default)]
    pub radius_cap: Option<f64>,
}

impl MarkPlan {
    pub fn times() -> Self {
        Self { times: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.grain_radius {
            g.validate("grain_radius")?;
            if let Some(cap) = self.radius_cap {
                if g.upper() > cap {
                    return Err(GeoError::InvalidParameter(format!(
                        "grain radius upper bound {} exceeds the cap {cap}",
                        g.upper()
                    )));
                }
            }
        }
        if let Some(v) = &self.growth_speed {
            v.validate("growth_speed")?;
        }
        Ok(())
    }
}

/// Draws the requested marks for every point. Each point's marks are a pure
/// function of `(seed, point id)`, so they do not depend on positions, on
/// point order, or on which other points are present.
pub fn attach_marks(config: &PointConfiguration, plan: &MarkPlan, seed: &SeedSpec) -> Result<PointConfiguration> {
    plan.validate()?;
    let key = seed.key();
    let mut out = config.clone();
    for p in &mut out.points {
        let base = p.id.wrapping_mul(4);
        if plan.times {
            p.time = Some(counter_uniform(key, base));
        }
        if let Some(g) = &plan.grain_radius {
            p.grain_radius = Some(g.quantile(counter_uniform(key, base + 1)));
        }
        if let Some(v) = &plan.growth_speed {
            p.growth_speed = Some(v.quantile(counter_uniform(key, base + 2)));
        }
    }
    Ok(out)
}
