//! The dominating spatial birth-death process, generated backward from 0.
//!
//! In equilibrium the process is an M/M/∞ queue on the window, which is
//! time-reversible: death times form a Poisson process of the birth rate
//! and each lifetime is an independent Exp(1). Extending the horizon
//! further back only appends points, so earlier draws never change.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::Result;
use crate::geometry::Window;
use crate::processes::{attach_marks, sample_poisson_count, MarkPlan, MarkedPoint, PointConfiguration};
use crate::rng::{SeedSpec, StreamRng};

#[derive(Debug, Clone)]
pub(crate) struct DomPoint {
    pub point: MarkedPoint,
    pub birth: f64,
    pub death: f64,
    pub beta: f64,
}

pub(crate) struct Dominating {
    pub points: Vec<DomPoint>,
    horizon: f64,
    rate: f64,
    window: Window,
    rng: StreamRng,
    plan: Option<MarkPlan>,
    mark_seed: SeedSpec,
}

impl Dominating {
    /// `rate` is the total birth rate over the window.
    pub fn new(rate: f64, window: Window, seed: &SeedSpec, plan: Option<MarkPlan>) -> Result<Self> {
        let mut d = Self {
            points: Vec::new(),
            horizon: 0.0,
            rate,
            window,
            rng: seed.child(0).rng(),
            plan,
            mark_seed: seed.child(1),
        };
        let n = sample_poisson_count(rate, &mut d.rng);
        for _ in 0..n {
            let age: f64 = d.rng.sample(Exp1);
            let residual: f64 = d.rng.sample(Exp1);
            d.push(-age, residual)?;
        }
        Ok(d)
    }

    fn push(&mut self, birth: f64, death: f64) -> Result<()> {
        let id = self.points.len() as u64;
        let pos = self.window.uniform_point(&mut self.rng);
        let beta: f64 = self.rng.random();
        let mut point = MarkedPoint::new(id, pos);
        if let Some(plan) = &self.plan {
            let single = PointConfiguration::new(self.window, vec![point])?;
            point = attach_marks(&single, plan, &self.mark_seed)?.points.remove(0);
        }
        self.points.push(DomPoint { point, birth, death, beta });
        Ok(())
    }

    /// Makes sure every point alive somewhere in [−t, 0] is present.
    pub fn extend_to(&mut self, t: f64) -> Result<()> {
        if t <= self.horizon {
            return Ok(());
        }
        let span = t - self.horizon;
        let n = sample_poisson_count(self.rate * span, &mut self.rng);
        let start = self.horizon;
        for _ in 0..n {
            let death = -(start + span * self.rng.random::<f64>());
            let life: f64 = self.rng.sample(Exp1);
            self.push(death - life, death)?;
        }
        self.horizon = t;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_keeps_earlier_points_and_has_stationary_counts() {
        let w = Window::unit(1);
        let mut d = Dominating::new(5.0, w, &SeedSpec::new(1), None).unwrap();
        d.extend_to(2.0).unwrap();
        let snapshot: Vec<f64> = d.points.iter().map(|p| p.birth).collect();
        d.extend_to(8.0).unwrap();
        assert_eq!(&d.points.iter().map(|p| p.birth).collect::<Vec<_>>()[..snapshot.len()], &snapshot[..]);
        // alive count at −4 should look like Poisson(5)
        let mut total = 0.0;
        let reps = 2000;
        for r in 0..reps {
            let mut d = Dominating::new(5.0, w, &SeedSpec::new(100 + r), None).unwrap();
            d.extend_to(6.0).unwrap();
            total += d.points.iter().filter(|p| p.birth <= -4.0 && p.death > -4.0).count() as f64;
        }
        let mean = total / reps as f64;
        assert!((mean - 5.0).abs() < 4.0 * (5.0f64 / reps as f64).sqrt(), "{mean}");
    }
}
