//! Point configurations and the samplers that produce them.

mod csv;
mod density;
mod marks;
mod nested;
mod sampling;

pub use self::csv::{read_csv, write_csv};
pub use density::{DensitySpec, DensityVariant};
pub use marks::{attach_marks, MarkDist, MarkPlan};
pub use nested::{nested_window_coupling, NestedCoupling};
pub use sampling::{sample_binomial, sample_homogeneous_poisson, sample_inhomogeneous_poisson, sample_poisson_count};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::geometry::{PointId, Position, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub id: PointId,
    pub position: Position,
    /// Arrival time in [0, 1].
    pub time: Option<f64>,
    /// Grain radius for germ-grain models, initial seed radius for birth-growth.
    pub grain_radius: Option<f64>,
    pub growth_speed: Option<f64>,
}

impl MarkedPoint {
    pub fn new(id: PointId, position: Position) -> Self {
        Self { id, position, time: None, grain_radius: None, growth_speed: None }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    pub fn with_radius(mut self, r: f64) -> Self {
        self.grain_radius = Some(r);
        self
    }

    pub fn with_speed(mut self, v: f64) -> Self {
        self.growth_speed = Some(v);
        self
    }

    pub fn time(&self) -> Result<f64> {
        self.time.ok_or(GeoError::MissingMark { id: self.id, mark: "time" })
    }

    pub fn radius(&self) -> Result<f64> {
        self.grain_radius.ok_or(GeoError::MissingMark { id: self.id, mark: "grain_radius" })
    }

    pub fn speed(&self) -> Result<f64> {
        self.growth_speed.ok_or(GeoError::MissingMark { id: self.id, mark: "growth_speed" })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    pub window: Window,
    pub points: Vec<MarkedPoint>,
    pub intensity_label: Option<f64>,
}

impl PointConfiguration {
    /// Validating constructor: positions inside the window, ids distinct,
    /// marks in range.
    pub fn new(window: Window, points: Vec<MarkedPoint>) -> Result<Self> {
        let cfg = Self { window, points, intensity_label: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub(crate) fn unchecked(window: Window, points: Vec<MarkedPoint>) -> Self {
        Self { window, points, intensity_label: None }
    }

    pub fn empty(window: Window) -> Self {
        Self { window, points: Vec::new(), intensity_label: None }
    }

    pub fn with_label(mut self, label: f64) -> Self {
        self.intensity_label = Some(label);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.window.dim
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.points.len());
        for p in &self.points {
            if !self.window.contains(&p.position) {
                return Err(GeoError::InconsistentInput(format!("point {} lies outside the window", p.id)));
            }
            if !seen.insert(p.id) {
                return Err(GeoError::InconsistentInput(format!("duplicate point id {}", p.id)));
            }
            if let Some(t) = p.time {
                if !(0.0..=1.0).contains(&t) {
                    return Err(GeoError::InconsistentInput(format!("point {} has arrival time {t}", p.id)));
                }
            }
            for (name, v) in [("grain_radius", p.grain_radius), ("growth_speed", p.growth_speed)] {
                if let Some(v) = v {
                    if !(v > 0.0) {
                        return Err(GeoError::InconsistentInput(format!("point {} has {name} {v}", p.id)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn ids(&self) -> Vec<PointId> {
        self.points.iter().map(|p| p.id).collect()
    }

    pub fn positions(&self) -> Vec<Position> {
        self.points.iter().map(|p| p.position).collect()
    }

    /// Copy with every position and the window multiplied by `s`. Marks are
    /// untouched (grain radii and speeds already live in rescaled units).
    pub fn scaled(&self, s: f64) -> Self {
        if s == 1.0 {
            return self.clone();
        }
        let d = self.window.dim;
        let points = self
            .points
            .iter()
            .map(|p| {
                let mut q = p.clone();
                for c in q.position.iter_mut().take(d) {
                    *c *= s;
                }
                q
            })
            .collect();
        Self { window: self.window.scaled(s), points, intensity_label: self.intensity_label }
    }

    /// Copy holding only the points for which `keep` is true.
    pub fn filtered<F: Fn(&MarkedPoint) -> bool>(&self, keep: F) -> Self {
        Self {
            window: self.window,
            points: self.points.iter().filter(|p| keep(p)).cloned().collect(),
            intensity_label: self.intensity_label,
        }
    }

    pub fn index_of(&self, id: PointId) -> Option<usize> {
        self.points.iter().position(|p| p.id == id)
    }

    /// An id not used by any point.
    pub fn fresh_id(&self) -> PointId {
        self.points.iter().map(|p| p.id).max().map_or(0, |m| m + 1)
    }

    /// Copy with `p` appended. Fails if its position or id is taken.
    pub fn with_point(&self, p: MarkedPoint) -> Result<Self> {
        if self.points.iter().any(|q| q.position == p.position) {
            return Err(GeoError::DuplicatePoint);
        }
        if self.points.iter().any(|q| q.id == p.id) {
            return Err(GeoError::InconsistentInput(format!("duplicate point id {}", p.id)));
        }
        let mut out = self.clone();
        out.points.push(p);
        Ok(out)
    }
}
