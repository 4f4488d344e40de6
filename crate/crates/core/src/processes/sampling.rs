use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{DensitySpec, MarkedPoint, PointConfiguration};
use crate::error::{GeoError, Result};
use crate::geometry::Window;
use crate::rng::SeedSpec;

pub fn sample_poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
}

fn check_intensity(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GeoError::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Homogeneous Poisson process of intensity τ on `window`.
///
/// Count and positions come from sub-stream 0 of `seed`; the thinning
/// sampler below uses the same sub-stream, so κ ≡ 1 reproduces this output.
pub fn sample_homogeneous_poisson(tau: f64, window: &Window, seed: &SeedSpec) -> Result<PointConfiguration> {
    check_intensity("τ", tau)?;
    let mut rng = seed.child(0).rng();
    let n = sample_poisson_count(tau * window.volume(), &mut rng);
    let points = (0..n).map(|i| MarkedPoint::new(i as u64, window.uniform_point(&mut rng))).collect();
    Ok(PointConfiguration::unchecked(*window, points).with_label(tau))
}

/// Poisson process of intensity λκ on the unit cube, by thinning a process
/// of intensity λ·max κ. Surviving points keep their proposal ids.
pub fn sample_inhomogeneous_poisson(lambda: f64, kappa: &DensitySpec, seed: &SeedSpec) -> Result<PointConfiguration> {
    check_intensity("λ", lambda)?;
    let window = Window::unit(kappa.dim());
    let bound = kappa.max_bound();
    if !(bound > 0.0) {
        return Err(GeoError::DegenerateDensity("maximum of κ is zero".into()));
    }
    let proposal = sample_homogeneous_poisson(lambda * bound, &window, seed)?;
    let mut keep = seed.child(1).rng();
    let mut points = Vec::with_capacity(proposal.len());
    for p in proposal.points {
        let k = kappa.eval(&p.position);
        if k > bound {
            return Err(GeoError::DegenerateDensity(format!("κ = {k} exceeds its bound {bound}")));
        }
        let u: f64 = keep.random();
        if u * bound < k {
            points.push(p);
        }
    }
    Ok(PointConfiguration::unchecked(window, points).with_label(lambda))
}

/// Exactly n i.i.d. points with density κ (rejection against max κ).
pub fn sample_binomial(n: usize, kappa: &DensitySpec, seed: &SeedSpec) -> Result<PointConfiguration> {
    if n == 0 {
        return Err(GeoError::InvalidParameter("n must be at least 1".into()));
    }
    let window = Window::unit(kappa.dim());
    let bound = kappa.max_bound();
    let mut rng = seed.child(0).rng();
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let x = window.uniform_point(&mut rng);
        let k = kappa.eval(&x);
        if k > bound {
            return Err(GeoError::DegenerateDensity(format!("κ = {k} exceeds its bound {bound}")));
        }
        if rng.random::<f64>() * bound < k {
            points.push(MarkedPoint::new(points.len() as u64, x));
        }
    }
    Ok(PointConfiguration::unchecked(window, points).with_label(n as f64))
}
