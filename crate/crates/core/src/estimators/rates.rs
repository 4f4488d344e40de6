//! Quadratic rate functions at the scalar, vector and measure level.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::quadrature::{integrate, Quadrature};
use super::tables::VTable;
use crate::error::{GeoError, Result};
use crate::geometry::Position;
use crate::measures::TestFunction;
use crate::processes::DensitySpec;

/// K(t) = t²/(2Σ).
pub fn rate_scalar(t: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(GeoError::InvalidParameter(format!("Σ must be positive, got {sigma}")));
    }
    Ok(t * t / (2.0 * sigma))
}

/// sup over an s-grid of ts − s²Σ/2, refined around the best node.
pub fn legendre_numeric(t: f64, sigma: f64, half_width: f64, nodes: usize) -> f64 {
    let f = |s: f64| t * s - 0.5 * s * s * sigma;
    let (mut lo, mut hi) = (-half_width, half_width);
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0.0;
    for _ in 0..8 {
        let h = (hi - lo) / nodes as f64;
        for k in 0..=nodes {
            let s = lo + k as f64 * h;
            if f(s) > best {
                best = f(s);
                arg = s;
            }
        }
        lo = arg - h;
        hi = arg + h;
    }
    best
}

/// A candidate ν for the measure-level rate function.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureInput {
    /// ϱ = dν/dμ at the midpoints of a regular grid, first axis fastest.
    Density { per_axis: usize, values: Vec<f64> },
    /// Point masses; not absolutely continuous.
    Atoms(Vec<(Position, f64)>),
}

pub const MIN_RATE_GRID: usize = 16;

/// I(ν) = ½∫ϱ² V(κ)κ dx, or +∞ for atoms.
pub fn rate_measure(nu: &MeasureInput, vtable: &VTable, kappa: &DensitySpec) -> Result<f64> {
    let d = kappa.dim();
    match nu {
        MeasureInput::Atoms(atoms) => {
            Ok(if atoms.iter().all(|(_, m)| *m == 0.0) { 0.0 } else { f64::INFINITY })
        }
        MeasureInput::Density { per_axis, values } => {
            let n = *per_axis;
            if n < MIN_RATE_GRID {
                return Err(GeoError::InvalidParameter(format!("rate grid needs ≥ {MIN_RATE_GRID} nodes per axis")));
            }
            if values.len() != n.pow(d as u32) {
                return Err(GeoError::InconsistentInput("density grid size does not match per_axis^d".into()));
            }
            let mut sum = 0.0;
            for (flat, rho) in values.iter().enumerate() {
                let x = grid_point(flat, n, d);
                let k = kappa.eval(&x);
                sum += rho * rho * vtable.0.interpolate(k)? * k;
            }
            Ok(0.5 * sum / values.len() as f64)
        }
    }
}

pub(crate) fn grid_point(flat: usize, n: usize, d: usize) -> Position {
    let mut x = [0.0; 3];
    let mut rem = flat;
    for xi in x.iter_mut().take(d) {
        *xi = ((rem % n) as f64 + 0.5) / n as f64;
        rem /= n;
    }
    x
}

/// C_ij = ∫ f_i f_j V(κ)κ dx.
pub fn covariance_matrix(fs: &[TestFunction], kappa: &DensitySpec, vtable: &VTable, rule: &Quadrature) -> Result<DMatrix<f64>> {
    let d = kappa.dim();
    let l = fs.len();
    let mut c = DMatrix::zeros(l, l);
    for i in 0..l {
        for j in i..l {
            let v = integrate(
                |x| {
                    let k = kappa.eval(x);
                    Ok(fs[i].eval(x, d) * fs[j].eval(x, d) * vtable.0.interpolate(k)? * k)
                },
                d,
                rule,
            )?;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// ½⟨t, C⁻¹t⟩, refusing a C that is numerically singular.
pub fn rate_from_covariance(t: &[f64], c: &DMatrix<f64>) -> Result<f64> {
    if c.nrows() != t.len() || c.ncols() != t.len() || t.is_empty() {
        return Err(GeoError::InconsistentInput("t and C must have matching non-zero size".into()));
    }
    let trace = c.trace();
    let min_eig = SymmetricEigen::new(c.clone()).eigenvalues.min();
    if !(trace > 0.0) || min_eig <= 1e-9 * trace {
        return Err(GeoError::LinearDependence { min_eigenvalue: min_eig, trace });
    }
    let tv = DVector::from_column_slice(t);
    let s = c
        .clone()
        .cholesky()
        .ok_or(GeoError::LinearDependence { min_eigenvalue: min_eig, trace })?
        .solve(&tv);
    Ok(0.5 * tv.dot(&s))
}

pub fn rate_multivariate(t: &[f64], fs: &[TestFunction], kappa: &DensitySpec, vtable: &VTable, rule: &Quadrature) -> Result<f64> {
    let c = covariance_matrix(fs, kappa, vtable, rule)?;
    rate_from_covariance(t, &c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::Estimate;
    use crate::rng::SeedSpec;
    use rand::Rng;

    fn table() -> VTable {
        VTable::new(
            vec![0.5, 1.0, 1.5, 2.0],
            [0.3, 0.35, 0.45, 0.5].iter().map(|&v| Estimate::exact(v)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn scalar_rate() {
        assert_eq!(rate_scalar(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(rate_scalar(2.0, 1.0).unwrap(), 2.0);
        assert!(rate_scalar(1.0, 0.0).is_err());
        let mut rng = SeedSpec::new(9).rng();
        for _ in 0..100 {
            let t: f64 = rng.random_range(-3.0..3.0);
            let s: f64 = rng.random_range(0.1..4.0);
            let exact = rate_scalar(t, s).unwrap();
            assert!((legendre_numeric(t, s, 50.0, 200) - exact).abs() < 1e-6);
        }
        for k in -20..=20 {
            let t = k as f64 * 0.25;
            let v = rate_scalar(t, 1.3).unwrap();
            assert_eq!(v, rate_scalar(-t, 1.3).unwrap());
            let mid = rate_scalar(t + 0.125, 1.3).unwrap();
            assert!(mid <= 0.5 * (v + rate_scalar(t + 0.25, 1.3).unwrap()) + 1e-15);
        }
    }

    #[test]
    fn measure_rate() {
        let k = DensitySpec::uniform(1);
        let v = VTable::constant(vec![1.0], 0.8).unwrap();
        let zero = MeasureInput::Density { per_axis: 16, values: vec![0.0; 16] };
        assert_eq!(rate_measure(&zero, &v, &k).unwrap(), 0.0);
        let one = MeasureInput::Density { per_axis: 16, values: vec![1.0; 16] };
        assert!((rate_measure(&one, &v, &k).unwrap() - 0.4).abs() < 1e-14);
        let atoms = MeasureInput::Atoms(vec![([0.5, 0.0, 0.0], 1.0)]);
        assert_eq!(rate_measure(&atoms, &v, &k).unwrap(), f64::INFINITY);
        let coarse = MeasureInput::Density { per_axis: 8, values: vec![0.0; 8] };
        assert!(rate_measure(&coarse, &v, &k).is_err());
    }

    #[test]
    fn constructed_covariances() {
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0]));
        assert!((rate_from_covariance(&[2.0, 0.0], &c).unwrap() - 1.0).abs() < 1e-14);
        let id = DMatrix::identity(2, 2);
        assert!((rate_from_covariance(&[1.0, 1.0], &id).unwrap() - 1.0).abs() < 1e-14);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(rate_from_covariance(&[1.0, 0.0], &singular), Err(GeoError::LinearDependence { .. })));
    }

    #[test]
    fn vector_rate_reduces_to_scalar() {
        let kappa = DensitySpec::uniform(1);
        let f = TestFunction::Coordinate { axis: 0 };
        let rule = Quadrature::default();
        let c = covariance_matrix(&[f.clone()], &kappa, &VTable::constant(vec![1.0], 0.6).unwrap(), &rule).unwrap();
        let sigma = c[(0, 0)];
        let m = rate_multivariate(&[0.7], &[f], &kappa, &VTable::constant(vec![1.0], 0.6).unwrap(), &rule).unwrap();
        assert!((m - rate_scalar(0.7, sigma).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn covariance_is_symmetric_psd_and_dependence_detected() {
        let kappa = DensitySpec::uniform(2);
        let fs = vec![
            TestFunction::one(),
            TestFunction::Coordinate { axis: 0 },
            TestFunction::CosineProduct { frequencies: vec![1, 1] },
        ];
        let c = covariance_matrix(&fs, &kappa, &VTable::constant(vec![1.0], 0.5).unwrap(), &Quadrature::fixed(32)).unwrap();
        assert_eq!(c, c.transpose());
        let eig = SymmetricEigen::new(c.clone()).eigenvalues;
        assert!(eig.min() >= -1e-12 * c.trace());
        let dup = vec![TestFunction::one(), TestFunction::one().scaled(2.0)];
        let v = VTable::constant(vec![1.0], 0.5).unwrap();
        assert!(rate_multivariate(&[1.0, 1.0], &dup, &kappa, &v, &Quadrature::fixed(16)).is_err());
    }

    #[test]
    fn legendre_bound_on_random_family() {
        // On the grid, ⟨f,ν⟩ − ½∫f²dμ = ∫(fϱ − f²/2)dμ ≤ ½∫ϱ²dμ, with equality at f = ϱ.
        let kappa = DensitySpec::uniform(1);
        let v = table();
        let n = 32;
        let w: Vec<f64> = (0..n)
            .map(|i| {
                let x = grid_point(i, n, 1);
                let k = kappa.eval(&x);
                v.0.interpolate(k).unwrap() * k / n as f64
            })
            .collect();
        let mut rng = SeedSpec::new(21).rng();
        for _ in 0..5 {
            let rho: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let i_nu = rate_measure(&MeasureInput::Density { per_axis: n, values: rho.clone() }, &v, &kappa).unwrap();
            let objective = |f: &[f64]| (0..n).map(|i| (f[i] * rho[i] - 0.5 * f[i] * f[i]) * w[i]).sum::<f64>();
            for _ in 0..1000 {
                let f: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                assert!(objective(&f) <= i_nu + 1e-6);
            }
            assert!((objective(&rho) - i_nu).abs() < 1e-12);
        }
    }
}
