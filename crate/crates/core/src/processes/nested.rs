//! Nested-window coupling.
//!
//! A unit-intensity process Π₁ on (ℝ⁺)^d × ℝ⁺ is built cell by cell: every
//! unit lattice cell and unit time layer gets its own stream, so Π₁ does not
//! depend on λ. The sample at λ keeps the points of Π₁ with spatial part in
//! `[0, λ^{1/d}]^d` and time coordinate `t <= κ(λ^{-1/d} x)`, then rescales
//! into the unit cube. Calls at λ₁ < λ₂ therefore see nested point sets.

use rand::Rng;

use super::{sample_poisson_count, DensitySpec, MarkedPoint, PointConfiguration};
use crate::error::{GeoError, Result};
use crate::geometry::Window;
use crate::rng::SeedSpec;

const IDX_BITS: u32 = 12;
const LAYER_BITS: u32 = 12;

/// Position of a lattice cell in shell order: cells with max coordinate s
/// come after all cells of `[0, s)^d`. Gives every cell a rank that does not
/// depend on how far the lattice is explored.
pub(crate) fn shell_rank(c: &[u64]) -> u64 {
    let d = c.len() as u32;
    let s = c.iter().copied().max().unwrap_or(0);
    let below = s.pow(d);
    let lex_outer: u64 = c.iter().enumerate().map(|(i, &ci)| ci * (s + 1).pow(d - 1 - i as u32)).sum();
    let mut lex_inner = 0;
    for (i, &ci) in c.iter().enumerate() {
        let w = s.pow(d - 1 - i as u32);
        if ci >= s {
            lex_inner += s * w;
            break;
        }
        lex_inner += ci * w;
    }
    below + lex_outer - lex_inner
}

#[derive(Debug, Clone)]
pub struct NestedCoupling {
    master: SeedSpec,
    kappa: DensitySpec,
}

impl NestedCoupling {
    pub fn new(master: SeedSpec, kappa: DensitySpec) -> Self {
        Self { master, kappa }
    }

    pub fn dim(&self) -> usize {
        self.kappa.dim()
    }

    /// Number of unit time layers needed to cover the range of κ.
    fn layers(&self) -> u64 {
        (self.kappa.max_bound().ceil() as u64).max(1)
    }

    /// The realization of P_{λκ} on the unit cube. Points carry an arrival
    /// time mark drawn with the cell, so nested samples share marks too.
    pub fn sample(&self, lambda: f64) -> Result<PointConfiguration> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(GeoError::InvalidParameter(format!("λ must be positive, got {lambda}")));
        }
        let d = self.dim();
        let side = lambda.powf(1.0 / d as f64);
        let per_axis = side.ceil().max(1.0) as u64;
        let layers = self.layers();
        if layers >= 1 << LAYER_BITS {
            return Err(GeoError::InvalidParameter("κ is too large for the nested coupling".into()));
        }
        let mut points = Vec::new();
        let total = per_axis.pow(d as u32);
        let mut c = [0u64; 3];
        for flat in 0..total {
            let mut rem = flat;
            for ci in c.iter_mut().take(d).rev() {
                *ci = rem % per_axis;
                rem /= per_axis;
            }
            let rank = shell_rank(&c[..d]);
            for layer in 0..layers {
                let mut rng = self.master.child(rank).child(layer).rng();
                let n = sample_poisson_count(1.0, &mut rng);
                assert!(n < 1 << IDX_BITS, "cell population overflow");
                for idx in 0..n {
                    let mut x = [0.0; 3];
                    for i in 0..d {
                        x[i] = c[i] as f64 + rng.random::<f64>();
                    }
                    let t = layer as f64 + rng.random::<f64>();
                    let arrival: f64 = rng.random();
                    if x[..d].iter().any(|&xi| xi > side) {
                        continue;
                    }
                    let mut u = [0.0; 3];
                    for i in 0..d {
                        u[i] = x[i] / side;
                    }
                    if t <= self.kappa.eval(&u) {
                        let id = (rank << (IDX_BITS + LAYER_BITS)) | (layer << IDX_BITS) | idx as u64;
                        points.push(MarkedPoint::new(id, u).with_time(arrival));
                    }
                }
            }
        }
        Ok(PointConfiguration::unchecked(Window::unit(d), points).with_label(lambda))
    }
}

pub fn nested_window_coupling(master: &SeedSpec, lambda: f64, kappa: &DensitySpec) -> Result<PointConfiguration> {
    NestedCoupling::new(master.clone(), kappa.clone()).sample(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    #[test]
    fn shell_rank_is_a_bijection_on_each_cube() {
        for d in 1..=3u32 {
            let n = 5u64;
            let mut seen = HashSet::new();
            for flat in 0..n.pow(d) {
                let mut c = vec![0u64; d as usize];
                let mut rem = flat;
                for ci in c.iter_mut().rev() {
                    *ci = rem % n;
                    rem /= n;
                }
                let r = shell_rank(&c);
                assert!(r < n.pow(d));
                assert!(seen.insert(r));
            }
        }
    }

    #[test]
    fn nested_sets_are_subsets() {
        for d in 1..=3 {
            let k = DensitySpec::uniform(d);
            let nc = NestedCoupling::new(SeedSpec::new(12), k);
            let small = nc.sample(40.0).unwrap();
            let big = nc.sample(130.0).unwrap();
            let s1 = 40f64.powf(1.0 / d as f64);
            let s2 = 130f64.powf(1.0 / d as f64);
            let big_map: HashMap<u64, [f64; 3]> =
                big.points.iter().map(|p| (p.id, p.position.map(|c| c * s2))).collect();
            for p in &small.points {
                let unscaled = p.position.map(|c| c * s1);
                let other = big_map.get(&p.id).expect("subset");
                for i in 0..d {
                    assert!((unscaled[i] - other[i]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn inhomogeneous_coupling_retains_by_time_coordinate() {
        let k = DensitySpec::new(
            crate::processes::DensityVariant::ProductPolynomial { coeffs: vec![vec![0.5, 1.0]] },
            1,
        )
        .unwrap();
        let nc = NestedCoupling::new(SeedSpec::new(2), k);
        let a = nc.sample(50.0).unwrap();
        let b = nc.sample(200.0).unwrap();
        assert!(a.len() < b.len());
        a.validate().unwrap();
    }
}
