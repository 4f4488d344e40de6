//! Empirical measures, test-function pairings, centring/scaling and the
//! weak-topology metric `dist_W`.

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::functionals::ScoreVector;
use crate::geometry::Position;
use crate::processes::PointConfiguration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { value: f64 },
    /// `f(x) = x_axis` (axes numbered from 0).
    Coordinate { axis: usize },
    /// `f(x) = Π_i cos(π k_i x_i)`.
    CosineProduct { frequencies: Vec<u32> },
    /// Smooth bump supported in `[δ, 1−δ]^d` with maximum 1.
    BoundaryBump { margin: f64 },
    Scaled { factor: f64, inner: Box<TestFunction> },
    Sum { terms: Vec<TestFunction> },
}

fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * s - 1.0;
    (1.0 - 1.0 / (1.0 - u * u)).exp()
}

impl TestFunction {
    pub fn one() -> Self {
        TestFunction::Constant { value: 1.0 }
    }

    pub fn scaled(self, factor: f64) -> Self {
        TestFunction::Scaled { factor, inner: Box::new(self) }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            TestFunction::Coordinate { axis } if *axis >= d => {
                Err(GeoError::InvalidParameter(format!("coordinate axis {axis} out of range for d={d}")))
            }
            TestFunction::CosineProduct { frequencies } if frequencies.len() > d => Err(GeoError::InvalidParameter(
                format!("cosine product has {} frequencies for d={d}", frequencies.len()),
            )),
            TestFunction::BoundaryBump { margin } if !(*margin > 0.0 && *margin < 0.5) => {
                Err(GeoError::InvalidParameter(format!("bump margin must lie in (0, 1/2), got {margin}")))
            }
            TestFunction::Scaled { inner, .. } => inner.validate(d),
            TestFunction::Sum { terms } => terms.iter().try_for_each(|t| t.validate(d)),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &Position, d: usize) -> f64 {
        match self {
            TestFunction::Constant { value } => *value,
            TestFunction::Coordinate { axis } => x[*axis],
            TestFunction::CosineProduct { frequencies } => frequencies
                .iter()
                .enumerate()
                .map(|(i, &k)| (std::f64::consts::PI * k as f64 * x[i]).cos())
                .product(),
            TestFunction::BoundaryBump { margin } => {
                let width = 1.0 - 2.0 * margin;
                (0..d).map(|i| bump((x[i] - margin) / width)).product()
            }
            TestFunction::Scaled { factor, inner } => factor * inner.eval(x, d),
            TestFunction::Sum { terms } => terms.iter().map(|t| t.eval(x, d)).sum(),
        }
    }

    /// ‖f‖_∞ on the unit cube (an upper bound for sums).
    pub fn sup_norm(&self) -> f64 {
        match self {
            TestFunction::Constant { value } => value.abs(),
            TestFunction::Coordinate { .. } | TestFunction::CosineProduct { .. } | TestFunction::BoundaryBump { .. } => 1.0,
            TestFunction::Scaled { factor, inner } => factor.abs() * inner.sup_norm(),
            TestFunction::Sum { terms } => terms.iter().map(TestFunction::sup_norm).sum(),
        }
    }

    /// Support margin δ when f vanishes outside `[δ, 1−δ]^d`.
    pub fn support_margin(&self) -> Option<f64> {
        match self {
            TestFunction::BoundaryBump { margin } => Some(*margin),
            TestFunction::Scaled { inner, .. } => inner.support_margin(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub dim: usize,
    pub atoms: Vec<(Position, f64)>,
    pub lambda: f64,
}

impl EmpiricalMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

/// One atom per point, weighted by its score.
pub fn build_measure(scores: &ScoreVector, config: &PointConfiguration) -> Result<EmpiricalMeasure> {
    if scores.ids.len() != config.len() || scores.ids.iter().zip(&config.points).any(|(a, p)| *a != p.id) {
        return Err(GeoError::InconsistentInput("score ids do not match the configuration".into()));
    }
    Ok(EmpiricalMeasure {
        dim: config.dim(),
        atoms: config.points.iter().zip(&scores.scores).map(|(p, &w)| (p.position, w)).collect(),
        lambda: scores.lambda,
    })
}

/// ⟨f, μ⟩ = Σ weight · f(position).
pub fn integrate_test_function(f: &TestFunction, mu: &EmpiricalMeasure) -> f64 {
    mu.atoms.iter().map(|(x, w)| w * f.eval(x, mu.dim)).sum()
}

/// Scaling exponent α_λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaRule {
    /// α_λ = λ^β with 0 < β < 1/2.
    Power { beta: f64 },
    /// α_λ = sqrt(log log λ), for λ > e.
    LogLog,
}

impl AlphaRule {
    pub fn alpha(&self, lambda: f64) -> f64 {
        match *self {
            AlphaRule::Power { beta } => lambda.powf(beta),
            AlphaRule::LogLog => lambda.ln().ln().sqrt(),
        }
    }
}

/// A raw pairing together with the calibration mean used to centre it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteredSample {
    pub raw: f64,
    pub calibration_mean: f64,
    pub calibration_se: f64,
    pub lambda: f64,
    pub alpha: f64,
}

impl CenteredSample {
    pub fn scaled(&self) -> f64 {
        (self.raw - self.calibration_mean) / (self.alpha * self.lambda.sqrt())
    }
}

/// Maps each raw value v to α_λ^{-1} λ^{-1/2} (v − mean).
pub fn center_and_scale(raw: &[f64], calibration_mean: f64, lambda: f64, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || !(lambda > 0.0) {
        return Err(GeoError::InvalidParameter(format!("need α > 0 and λ > 0, got α={alpha}, λ={lambda}")));
    }
    let scale = alpha * lambda.sqrt();
    Ok(raw.iter().map(|v| (v - calibration_mean) / scale).collect())
}

/// Σ_k 2^{-k} ‖f_k‖^{-1} |⟨f_k, θ₁⟩ − ⟨f_k, θ₂⟩|, k = 1..|W|.
pub fn dist_w(a: &EmpiricalMeasure, b: &EmpiricalMeasure, family: &[TestFunction]) -> Result<f64> {
    if family.is_empty() {
        return Err(GeoError::InvalidParameter("test-function family is empty".into()));
    }
    let mut total = 0.0;
    for (k, f) in family.iter().enumerate() {
        let norm = f.sup_norm();
        if !(norm > 0.0) {
            return Err(GeoError::InvalidParameter(format!("test function {k} has zero sup norm")));
        }
        let diff = integrate_test_function(f, a) - integrate_test_function(f, b);
        total += diff.abs() / (norm * 2f64.powi(k as i32 + 1));
    }
    Ok(total)
}

/// The finite family used by the LIL driver: constant, the first three
/// coordinates, three cosine products and one boundary bump.
pub fn standard_family(d: usize, margin: f64) -> Vec<TestFunction> {
    let mut out = vec![TestFunction::one()];
    for axis in 0..d.min(3) {
        out.push(TestFunction::Coordinate { axis });
    }
    for k in 1..=3u32 {
        out.push(TestFunction::CosineProduct { frequencies: vec![k; d] });
    }
    out.push(TestFunction::BoundaryBump { margin });
    out
}
