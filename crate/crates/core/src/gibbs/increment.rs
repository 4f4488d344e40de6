//! Add-one increments Δ_f(x, X) = ⟨f, μ(X ∪ x)⟩ − ⟨f, μ(X)⟩ and bounds
//! on them over every X between a lower and an upper configuration.

use crate::error::Result;
use crate::functionals::{germ_grain_lattice_scores, score_rescaled, FunctionalKind};
use crate::geometry::{dist2, Position, Window};
use crate::measures::TestFunction;
use crate::processes::{MarkedPoint, PointConfiguration};
use crate::rng::SeedSpec;

use super::TiltParams;

/// Everything the sampler needs about the functional at a fixed λ.
pub(crate) struct Context<'a> {
    pub tilt: &'a TiltParams,
    pub d: usize,
    pub window: Window,
    /// λ^{1/d}.
    pub scale: f64,
    /// Interaction range in unit coordinates.
    pub range: Option<f64>,
    pub lattice_step: f64,
    pub max_enumeration: usize,
    /// u ‖f‖_∞ C_ξ.
    pub global: f64,
    /// ‖f‖_∞ C_ξ, the largest possible |Δ_f|.
    pub reach: f64,
}

fn constant_value(f: &TestFunction) -> Option<f64> {
    match f {
        TestFunction::Constant { value } => Some(*value),
        TestFunction::Scaled { factor, inner } => constant_value(inner).map(|v| factor * v),
        _ => None,
    }
}

impl Context<'_> {
    fn f(&self, x: &Position) -> f64 {
        self.tilt.f.eval(x, self.d)
    }

    /// ξ_λ scores of a unit-window configuration. Germ-grain volumes use
    /// the deterministic lattice rule so that increments are exact.
    pub fn scores(&self, cfg: &PointConfiguration) -> Result<Vec<f64>> {
        let scaled = cfg.scaled(self.scale);
        match &self.tilt.functional.kind {
            FunctionalKind::GermGrainVolume { grain_dist, .. } => {
                germ_grain_lattice_scores(&scaled, grain_dist.upper(), self.lattice_step)
            }
            _ => score_rescaled(&self.tilt.functional, &scaled, &SeedSpec::new(0)),
        }
    }

    /// ⟨f, μ(X)⟩.
    pub fn statistic(&self, cfg: &PointConfiguration) -> Result<f64> {
        let s = self.scores(cfg)?;
        Ok(cfg.points.iter().zip(&s).map(|(p, v)| self.f(&p.position) * v).sum())
    }

    fn near(&self, x: &Position, y: &Position) -> bool {
        self.range.is_none_or(|r| dist2(x, y) <= r * r)
    }

    /// Exact Δ_f(x, X) from the points of X that can matter.
    pub fn delta(&self, x: &MarkedPoint, others: &[&MarkedPoint]) -> Result<f64> {
        let mut pts: Vec<MarkedPoint> =
            others.iter().filter(|p| self.near(&x.position, &p.position)).map(|p| (*p).clone()).collect();
        let without = if pts.is_empty() { Vec::new() } else { self.scores(&PointConfiguration::unchecked(self.window, pts.clone()))? };
        pts.push(x.clone());
        let with = self.scores(&PointConfiguration::unchecked(self.window, pts.clone()))?;
        let n = pts.len() - 1;
        let mut delta = self.f(&x.position) * with[n];
        for k in 0..n {
            delta += self.f(&pts[k].position) * (with[k] - without[k]);
        }
        Ok(delta)
    }

    /// Bounds on Δ_f(x, X) over lower ⊆ X ⊆ lower ∪ uncertain.
    pub fn delta_bounds(&self, x: &MarkedPoint, lower: &[&MarkedPoint], uncertain: &[&MarkedPoint]) -> Result<(f64, f64)> {
        let lower: Vec<&MarkedPoint> = lower.iter().copied().filter(|p| self.near(&x.position, &p.position)).collect();
        let uncertain: Vec<&MarkedPoint> = uncertain.iter().copied().filter(|p| self.near(&x.position, &p.position)).collect();
        if uncertain.is_empty() {
            let v = self.delta(x, &lower)?;
            return Ok((v, v));
        }
        if let FunctionalKind::NnThreshold { t } = self.tilt.functional.kind {
            // Term-wise bounds can overshoot the global one.
            let (lo, hi) = self.nn_bounds(x, &lower, &uncertain, t);
            return Ok((lo.max(-self.reach), hi.min(self.reach)));
        }
        if let (FunctionalKind::GermGrainVolume { .. }, Some(_)) = (&self.tilt.functional.kind, constant_value(&self.tilt.f)) {
            // Newly covered volume only shrinks as X grows.
            let at_lower = self.delta(x, &lower)?;
            let mut all = lower.clone();
            all.extend_from_slice(&uncertain);
            let at_upper = self.delta(x, &all)?;
            return Ok((at_lower.min(at_upper), at_lower.max(at_upper)));
        }
        if uncertain.len() <= self.max_enumeration {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for mask in 0u64..(1 << uncertain.len()) {
                let mut set = lower.clone();
                set.extend(uncertain.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| *p));
                let v = self.delta(x, &set)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            return Ok((lo, hi));
        }
        Ok((-self.reach, self.reach))
    }

    /// Term-by-term bounds for the threshold indicator: x scores when some
    /// point lies within t, and each isolated y within t of x starts to
    /// score. Each term is bounded on its own.
    pub(super) fn nn_bounds(&self, x: &MarkedPoint, lower: &[&MarkedPoint], uncertain: &[&MarkedPoint], t: f64) -> (f64, f64) {
        let s2 = self.scale * self.scale;
        let close = |a: &Position, b: &Position| dist2(a, b) * s2 < t * t;
        let mut lo = 0.0;
        let mut hi = 0.0;
        let mut add = |f: f64, imin: bool, imax: bool| {
            let a = f * f64::from(u8::from(imin));
            let b = f * f64::from(u8::from(imax));
            lo += a.min(b);
            hi += a.max(b);
        };
        let fx = self.f(&x.position);
        let x_min = lower.iter().any(|p| close(&p.position, &x.position));
        let x_max = x_min || uncertain.iter().any(|p| close(&p.position, &x.position));
        add(fx, x_min, x_max);
        let isolated = |y: &MarkedPoint, set: &[&MarkedPoint]| !set.iter().any(|z| z.id != y.id && close(&z.position, &y.position));
        for y in lower {
            if close(&y.position, &x.position) {
                let iso_l = isolated(y, lower);
                let iso_u = iso_l && isolated(y, uncertain);
                add(self.f(&y.position), iso_u, iso_l);
            }
        }
        for y in uncertain {
            if close(&y.position, &x.position) {
                add(self.f(&y.position), false, isolated(y, lower));
            }
        }
        (lo, hi)
    }
}
