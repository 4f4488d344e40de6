//! Stabilizing scores ξ(x; X) for the four model families.
//!
//! Scores at intensity λ are evaluated on the configuration blown up by
//! λ^{1/d}, i.e. ξ_λ(x; X) = ξ(λ^{1/d} x; λ^{1/d} X). Model parameters
//! (ball volume 1, NN threshold t, grain radii, growth speeds) are stated
//! in those rescaled units.

mod birth_growth;
mod causal;
mod germ_grain;
mod knn;
mod rsa;

pub use birth_growth::{birth_growth_accept, BirthGrowthParams};
pub use causal::{causal_cluster, CausalCluster};
pub use germ_grain::{germ_grain_lattice_scores, germ_grain_scores, germ_grain_volume, union_volume_mc};
pub use knn::{knn_graph, nearest_distances, nn_indicator, KnnGraph};
pub use rsa::{arrival_order, rsa_pack, rsa_pack_naive};

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::geometry::{ball_radius_from_volume, unit_ball_volume, PointId};
use crate::processes::{MarkDist, MarkPlan, MarkedPoint, PointConfiguration};
use crate::rng::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionalKind {
    TrivialOne,
    RsaPacking,
    BirthGrowth {
        radius_dist: MarkDist,
        speed_dist: MarkDist,
        radius_cap: f64,
        /// Lower bound on the seed radii.
        rho_min: f64,
    },
    GermGrainVolume {
        grain_dist: MarkDist,
        volume_mc_samples: usize,
    },
    NnThreshold {
        t: f64,
    },
    NnDegree {
        k: usize,
        m: usize,
        /// Count in-degree in the directed graph instead of the undirected
        /// degree (every out-degree equals k, so that reading is vacuous).
        directed: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSpec {
    #[serde(flatten)]
    pub kind: FunctionalKind,
    #[serde(default)]
    pub increment_bound: Option<f64>,
}

/// Largest number of points that can have a given point as their strict
/// or tie-broken nearest neighbour.
fn kissing_number(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 6.0,
        _ => 12.0,
    }
}

impl FunctionalSpec {
    pub fn new(kind: FunctionalKind) -> Self {
        Self { kind, increment_bound: None }
    }

    pub fn trivial() -> Self {
        Self::new(FunctionalKind::TrivialOne)
    }

    pub fn rsa() -> Self {
        Self::new(FunctionalKind::RsaPacking)
    }

    pub fn nn_threshold(t: f64) -> Self {
        Self::new(FunctionalKind::NnThreshold { t })
    }

    pub fn nn_degree(k: usize, m: usize, directed: bool) -> Self {
        Self::new(FunctionalKind::NnDegree { k, m, directed })
    }

    pub fn germ_grain(grain_dist: MarkDist, volume_mc_samples: usize) -> Self {
        Self::new(FunctionalKind::GermGrainVolume { grain_dist, volume_mc_samples })
    }

    pub fn birth_growth(radius_dist: MarkDist, speed_dist: MarkDist, radius_cap: f64, rho_min: f64) -> Self {
        Self::new(FunctionalKind::BirthGrowth { radius_dist, speed_dist, radius_cap, rho_min })
    }

    pub fn with_increment_bound(mut self, c: f64) -> Self {
        self.increment_bound = Some(c);
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FunctionalKind::TrivialOne => "trivial_one",
            FunctionalKind::RsaPacking => "rsa_packing",
            FunctionalKind::BirthGrowth { .. } => "birth_growth",
            FunctionalKind::GermGrainVolume { .. } => "germ_grain_volume",
            FunctionalKind::NnThreshold { .. } => "nn_threshold",
            FunctionalKind::NnDegree { .. } => "nn_degree",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GeoError::InvalidParameter(m));
        match &self.kind {
            FunctionalKind::NnThreshold { t } if !(*t > 0.0) || !t.is_finite() => {
                bad(format!("nn_threshold needs t > 0, got {t}"))
            }
            FunctionalKind::NnDegree { k, .. } if *k == 0 => bad("nn_degree needs k >= 1".into()),
            FunctionalKind::BirthGrowth { radius_dist, speed_dist, radius_cap, rho_min } => {
                radius_dist.validate("radius_dist")?;
                speed_dist.validate("speed_dist")?;
                if !(*rho_min > 0.0) {
                    return bad(format!("birth_growth needs rho_min > 0, got {rho_min}"));
                }
                if radius_dist.lower() < *rho_min || radius_dist.upper() > *radius_cap {
                    return bad(format!(
                        "birth_growth radii must lie in [rho_min, radius_cap] = [{rho_min}, {radius_cap}]"
                    ));
                }
                Ok(())
            }
            FunctionalKind::GermGrainVolume { grain_dist, volume_mc_samples } => {
                grain_dist.validate("grain_dist")?;
                if *volume_mc_samples < 100 {
                    return bad(format!("volume_mc_samples must be at least 100, got {volume_mc_samples}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }?;
        if let Some(c) = self.increment_bound {
            if !(c > 0.0) {
                return bad(format!("increment_bound must be positive, got {c}"));
            }
        }
        Ok(())
    }

    /// Marks the functional reads.
    pub fn mark_plan(&self) -> MarkPlan {
        match &self.kind {
            FunctionalKind::RsaPacking => MarkPlan::times(),
            FunctionalKind::BirthGrowth { radius_dist, speed_dist, radius_cap, .. } => MarkPlan {
                times: true,
                grain_radius: Some(radius_dist.clone()),
                growth_speed: Some(speed_dist.clone()),
                radius_cap: Some(*radius_cap),
            },
            FunctionalKind::GermGrainVolume { grain_dist, .. } => MarkPlan {
                grain_radius: Some(grain_dist.clone()),
                radius_cap: Some(grain_dist.upper()),
                ..MarkPlan::default()
            },
            _ => MarkPlan::default(),
        }
    }

    pub fn needs_marks(&self) -> bool {
        self.mark_plan() != MarkPlan::default()
    }

    /// True for functionals whose scores are 0/1.
    pub fn is_indicator(&self) -> bool {
        !matches!(self.kind, FunctionalKind::GermGrainVolume { .. })
    }

    /// Bounded-increment constant C_ξ: the explicit value if set, otherwise a
    /// geometric bound. None for functionals without one.
    pub fn increment_bound(&self, d: usize) -> Option<f64> {
        if self.increment_bound.is_some() {
            return self.increment_bound;
        }
        match &self.kind {
            FunctionalKind::TrivialOne => Some(1.0),
            FunctionalKind::NnThreshold { .. } => Some(1.0 + kissing_number(d)),
            FunctionalKind::NnDegree { k, .. } => {
                let k = *k as f64;
                Some(1.0 + k + 2.0 * k * kissing_number(d))
            }
            // Inserting a point moves at most its own grain volume between
            // cells and adds at most that much again; the box bound also
            // covers lattice quadrature.
            FunctionalKind::GermGrainVolume { grain_dist, .. } => Some(2.0 * (2.0 * grain_dist.upper()).powi(d as i32)),
            FunctionalKind::RsaPacking | FunctionalKind::BirthGrowth { .. } => None,
        }
    }

    /// Distance (rescaled units) beyond which a point cannot change the
    /// add-one increment at the origin, when such a bound exists.
    pub fn interaction_range(&self) -> Option<f64> {
        match &self.kind {
            FunctionalKind::TrivialOne => Some(0.0),
            FunctionalKind::NnThreshold { t } => Some(2.0 * t),
            FunctionalKind::GermGrainVolume { grain_dist, .. } => Some(2.0 * grain_dist.upper()),
            _ => None,
        }
    }

    /// Score of an isolated point.
    pub fn singleton_score(&self, d: usize) -> f64 {
        match &self.kind {
            FunctionalKind::TrivialOne | FunctionalKind::RsaPacking | FunctionalKind::BirthGrowth { .. } => 1.0,
            FunctionalKind::NnThreshold { .. } => 0.0,
            FunctionalKind::NnDegree { m, .. } => f64::from(*m == 0),
            FunctionalKind::GermGrainVolume { grain_dist, .. } => unit_ball_volume(d) * grain_dist.upper().powi(d as i32),
        }
    }
}

/// Per-point scores, aligned with the configuration's point order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub ids: Vec<PointId>,
    pub scores: Vec<f64>,
    pub lambda: f64,
}

impl ScoreVector {
    pub fn get(&self, id: PointId) -> Option<f64> {
        self.ids.iter().position(|&i| i == id).map(|k| self.scores[k])
    }

    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(GeoError::InvalidParameter(format!("λ must be positive, got {lambda}")))
    }
}

fn flags_to_scores(flags: Vec<bool>) -> Vec<f64> {
    flags.into_iter().map(|f| f64::from(u8::from(f))).collect()
}

/// Raw scores of a configuration that is already in rescaled units.
pub(crate) fn score_rescaled(spec: &FunctionalSpec, scaled: &PointConfiguration, seed: &SeedSpec) -> Result<Vec<f64>> {
    let n = scaled.len();
    let d = scaled.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    match &spec.kind {
        FunctionalKind::TrivialOne => Ok(vec![1.0; n]),
        FunctionalKind::RsaPacking => {
            let r = ball_radius_from_volume(1.0, d)?;
            rsa_pack(scaled, r).map(flags_to_scores)
        }
        FunctionalKind::BirthGrowth { radius_cap, rho_min, .. } => {
            let params = BirthGrowthParams { radius_cap: *radius_cap, rho_min: *rho_min };
            birth_growth_accept(scaled, &params).map(flags_to_scores)
        }
        FunctionalKind::GermGrainVolume { grain_dist, volume_mc_samples } => {
            germ_grain_scores(scaled, grain_dist.upper(), *volume_mc_samples, seed)
        }
        FunctionalKind::NnThreshold { t } => {
            if n < 2 {
                return Ok(vec![0.0; n]);
            }
            Ok(nearest_distances(scaled).into_iter().map(|r| f64::from(u8::from(r < *t))).collect())
        }
        FunctionalKind::NnDegree { k, m, directed } => {
            if n < 2 {
                return Ok(vec![f64::from(*m == 0); n]);
            }
            let g = knn_graph(scaled, *k)?;
            let deg = if *directed { g.in_degrees() } else { g.degrees() };
            Ok(deg.into_iter().map(|v| f64::from(u8::from(v == *m))).collect())
        }
    }
}

/// ξ_λ(x; X) for every x in the configuration.
pub fn score_configuration(
    spec: &FunctionalSpec,
    config: &PointConfiguration,
    lambda: f64,
    seed: &SeedSpec,
) -> Result<ScoreVector> {
    check_lambda(lambda)?;
    spec.validate()?;
    let s = lambda.powf(1.0 / config.dim() as f64);
    let scaled = config.scaled(s);
    let scores = score_rescaled(spec, &scaled, seed)?;
    Ok(ScoreVector { ids: config.ids(), scores, lambda })
}

/// H(X) = Σ_x ξ_λ(x; X).
pub fn total_score(spec: &FunctionalSpec, config: &PointConfiguration, lambda: f64, seed: &SeedSpec) -> Result<f64> {
    Ok(score_configuration(spec, config, lambda, seed)?.total())
}

/// Δ(x, X) = H(X ∪ x) − H(X).
pub fn add_one_increment(
    spec: &FunctionalSpec,
    x: &MarkedPoint,
    config: &PointConfiguration,
    lambda: f64,
    seed: &SeedSpec,
) -> Result<f64> {
    let with = config.with_point(x.clone())?;
    Ok(total_score(spec, &with, lambda, seed)? - total_score(spec, config, lambda, seed)?)
}
