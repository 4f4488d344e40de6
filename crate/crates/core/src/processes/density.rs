use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::geometry::{check_dim, Position};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityVariant {
    Constant { value: f64 },
    /// `κ(x) = Π_i p_i(x_i)` with `p_i(s) = Σ_k coeffs[i][k] s^k`.
    ProductPolynomial { coeffs: Vec<Vec<f64>> },
    /// Node values on a regular grid over `[0,1]^d` (row-major, last axis
    /// fastest), multilinear in between.
    GridTable { shape: Vec<usize>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DensityConfig {
    dim: usize,
    #[serde(flatten)]
    variant: DensityVariant,
    #[serde(default = "default_true")]
    normalize: bool,
}

fn default_true() -> bool {
    true
}

/// A nonnegative density on `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityConfig", into = "DensityConfig")]
pub struct DensitySpec {
    variant: DensityVariant,
    dim: usize,
    normalized: bool,
    scale: f64,
    max_bound: f64,
    min_bound: f64,
}

impl TryFrom<DensityConfig> for DensitySpec {
    type Error = GeoError;
    fn try_from(c: DensityConfig) -> Result<Self> {
        Self::build(c.variant, c.dim, c.normalize)
    }
}

impl From<DensitySpec> for DensityConfig {
    fn from(d: DensitySpec) -> Self {
        DensityConfig { dim: d.dim, variant: d.variant, normalize: d.normalized }
    }
}

const BOUND_GRID: usize = 64;
const BOUND_SAFETY: f64 = 1.05;

fn poly(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * s + a)
}

impl DensitySpec {
    /// Builds the density and rescales it to integrate to one.
    pub fn new(variant: DensityVariant, dim: usize) -> Result<Self> {
        Self::build(variant, dim, true)
    }

    /// Builds the density exactly as given (no renormalization).
    pub fn raw(variant: DensityVariant, dim: usize) -> Result<Self> {
        Self::build(variant, dim, false)
    }

    pub fn uniform(dim: usize) -> Self {
        Self::new(DensityVariant::Constant { value: 1.0 }, dim).expect("uniform density")
    }

    fn build(variant: DensityVariant, dim: usize, normalize: bool) -> Result<Self> {
        check_dim(dim)?;
        match &variant {
            DensityVariant::Constant { value } => {
                if !(*value >= 0.0) || !value.is_finite() {
                    return Err(GeoError::InvalidParameter(format!("constant density {value}")));
                }
            }
            DensityVariant::ProductPolynomial { coeffs } => {
                if coeffs.len() != dim || coeffs.iter().any(|c| c.is_empty()) {
                    return Err(GeoError::InvalidParameter(format!(
                        "product polynomial needs {dim} non-empty coefficient lists"
                    )));
                }
            }
            DensityVariant::GridTable { shape, values } => {
                if shape.len() != dim || shape.iter().any(|&n| n < 2) {
                    return Err(GeoError::InvalidParameter(format!(
                        "grid table needs {dim} axes with at least 2 nodes"
                    )));
                }
                if values.len() != shape.iter().product::<usize>() {
                    return Err(GeoError::InvalidParameter("grid table size does not match shape".into()));
                }
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(GeoError::InvalidParameter("grid table values must be finite and >= 0".into()));
                }
            }
        }
        let mut spec = Self { variant, dim, normalized: normalize, scale: 1.0, max_bound: 0.0, min_bound: 0.0 };
        let (lo, hi) = spec.raw_bounds()?;
        if !(hi > 0.0) {
            return Err(GeoError::DegenerateDensity("maximum of κ is zero".into()));
        }
        if normalize {
            let integral = spec.raw_integral();
            if !(integral > 0.0) {
                return Err(GeoError::DegenerateDensity("∫κ is zero".into()));
            }
            spec.scale = 1.0 / integral;
        }
        spec.max_bound = hi * spec.scale;
        spec.min_bound = lo * spec.scale;
        Ok(spec)
    }

    fn raw_eval(&self, x: &Position) -> f64 {
        let d = self.dim;
        match &self.variant {
            DensityVariant::Constant { value } => *value,
            DensityVariant::ProductPolynomial { coeffs } => {
                (0..d).map(|i| poly(&coeffs[i], x[i].clamp(0.0, 1.0))).product()
            }
            DensityVariant::GridTable { shape, values } => {
                let mut base = [0usize; 3];
                let mut frac = [0.0; 3];
                for i in 0..d {
                    let cells = (shape[i] - 1) as f64;
                    let s = x[i].clamp(0.0, 1.0) * cells;
                    let j = (s.floor() as usize).min(shape[i] - 2);
                    base[i] = j;
                    frac[i] = s - j as f64;
                }
                let mut total = 0.0;
                for corner in 0..(1usize << d) {
                    let mut w = 1.0;
                    let mut flat = 0usize;
                    for i in 0..d {
                        let bit = (corner >> i) & 1;
                        w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                        flat = flat * shape[i] + base[i] + bit;
                    }
                    if w != 0.0 {
                        total += w * values[flat];
                    }
                }
                total
            }
        }
    }

    fn raw_integral(&self) -> f64 {
        match &self.variant {
            DensityVariant::Constant { value } => *value,
            DensityVariant::ProductPolynomial { coeffs } => coeffs
                .iter()
                .map(|c| c.iter().enumerate().map(|(k, a)| a / (k + 1) as f64).sum::<f64>())
                .product(),
            // Trapezoid weights integrate multilinear interpolants exactly.
            DensityVariant::GridTable { shape, values } => {
                let d = self.dim;
                let mut total = 0.0;
                for (flat, v) in values.iter().enumerate() {
                    let mut rem = flat;
                    let mut w = 1.0;
                    for i in (0..d).rev() {
                        let j = rem % shape[i];
                        rem /= shape[i];
                        let h = 1.0 / (shape[i] - 1) as f64;
                        w *= if j == 0 || j == shape[i] - 1 { h / 2.0 } else { h };
                    }
                    total += w * v;
                }
                total
            }
        }
    }

    fn raw_bounds(&self) -> Result<(f64, f64)> {
        match &self.variant {
            DensityVariant::Constant { value } => Ok((*value, *value)),
            DensityVariant::GridTable { values, .. } => {
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(0.0, f64::max);
                Ok((lo, hi))
            }
            DensityVariant::ProductPolynomial { .. } => {
                let d = self.dim;
                let n = BOUND_GRID;
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                let total = n.pow(d as u32);
                for flat in 0..total {
                    let mut x = [0.0; 3];
                    let mut rem = flat;
                    for xi in x.iter_mut().take(d) {
                        *xi = (rem % n) as f64 / (n - 1) as f64;
                        rem /= n;
                    }
                    let v = self.raw_eval(&x);
                    if v < 0.0 {
                        return Err(GeoError::InvalidParameter(format!("density is negative ({v}) at {x:?}")));
                    }
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                Ok((lo / BOUND_SAFETY, hi * BOUND_SAFETY))
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> &DensityVariant {
        &self.variant
    }

    pub fn eval(&self, x: &Position) -> f64 {
        self.scale * self.raw_eval(x)
    }

    /// Upper bound used for thinning.
    pub fn max_bound(&self) -> f64 {
        self.max_bound
    }

    /// Lower bound on κ (exact for constant and grid densities).
    pub fn min_bound(&self) -> f64 {
        self.min_bound
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.variant, DensityVariant::Constant { .. })
    }

    /// `∫κ` over the unit cube (1 after normalization).
    pub fn integral(&self) -> f64 {
        self.scale * self.raw_integral()
    }
}
