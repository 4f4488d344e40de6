use serde::{Deserialize, Serialize};

use super::common::{resolve_sigma, Model, TableSource};
use super::report::{ExperimentReport, Table, Verdict};
use crate::error::{GeoError, Result};
use crate::measures::{AlphaRule, TestFunction};
use crate::par::try_map_indexed;
use crate::processes::{NestedCoupling, PointConfiguration};
use crate::rng::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilTolerances {
    /// The trajectory must stay within `bound_factor · √(2Σ)`.
    #[serde(default = "two")]
    pub bound_factor: f64,
    /// Fraction of seeds that must stay within the bound.
    #[serde(default = "coverage")]
    pub coverage: f64,
}

fn two() -> f64 {
    2.0
}

fn coverage() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilConfig {
    #[serde(flatten)]
    pub model: Model,
    pub rho: f64,
    pub k_max: u32,
    /// Number of independent master seeds, each giving one trajectory.
    pub seeds: usize,
    pub calibration_reps: usize,
    pub sigma: TableSource,
    /// Largest expected point count a single λ_k may use.
    #[serde(default = "budget")]
    pub point_budget: f64,
    pub tolerances: LilTolerances,
}

fn budget() -> f64 {
    1.0e6
}

impl LilConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.sigma.validate()?;
        let margin = match self.model.test_function {
            TestFunction::BoundaryBump { margin } => margin,
            _ => return Err(GeoError::InvalidParameter("the test function must be a boundary bump".into())),
        };
        let expected = (1.0 - margin) / margin;
        if (self.rho - expected).abs() > 1e-9 * expected {
            return Err(GeoError::InvalidParameter(format!("ρ must equal (1−δ)/δ = {expected}, got {}", self.rho)));
        }
        if !(self.rho > 1.0) {
            return Err(GeoError::InvalidParameter("ρ must exceed 1".into()));
        }
        if self.k_max < 10 {
            return Err(GeoError::InvalidParameter(format!("k_max must be at least 10, got {}", self.k_max)));
        }
        if self.seeds == 0 || self.calibration_reps < 2 {
            return Err(GeoError::InsufficientData { needed: 2, got: self.calibration_reps });
        }
        let t = &self.tolerances;
        if !(t.bound_factor > 0.0) || !(t.coverage > 0.0 && t.coverage <= 1.0) {
            return Err(GeoError::InvalidParameter("bound factor must be positive and coverage in (0, 1]".into()));
        }
        Ok(())
    }

    /// (k, λ_k) for λ_k = ρ^{kd} > e^e, up to k_max.
    pub fn schedule(&self) -> Vec<(u32, f64)> {
        let d = self.model.dim() as f64;
        let floor = std::f64::consts::E.powf(std::f64::consts::E);
        (1..=self.k_max).map(|k| (k, self.rho.powf(k as f64 * d))).filter(|(_, l)| *l > floor).collect()
    }
}

/// True when every point of `small` appears in `large` with the same
/// unscaled position.
fn nested(small: &PointConfiguration, ls: f64, large: &PointConfiguration, ll: f64, d: usize) -> bool {
    let (ss, sl) = (ls.powf(1.0 / d as f64), ll.powf(1.0 / d as f64));
    small.points.iter().all(|p| match large.index_of(p.id) {
        Some(j) => {
            let q = &large.points[j];
            (0..d).all(|i| (p.position[i] * ss - q.position[i] * sl).abs() <= 1e-9 * sl.max(1.0)) && p.time == q.time
        }
        None => false,
    })
}

pub fn lil_trajectory(cfg: &LilConfig, master: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let seed = SeedSpec::new(master);
    let mut report = ExperimentReport::new("lil", serde_json::to_value(cfg).unwrap_or_default(), master);
    let d = cfg.model.dim();
    let sigma = resolve_sigma(&cfg.model, &cfg.sigma, &seed.child(0))?;
    report.cell("sigma", &sigma);
    let bound = cfg.tolerances.bound_factor * (2.0 * sigma.value.max(0.0)).sqrt();
    report.cell("bound", bound);

    let peak = cfg.model.density.max_bound();
    let mut schedule = cfg.schedule();
    if let Some(pos) = schedule.iter().position(|(_, l)| l * peak > cfg.point_budget) {
        report.cell("truncated_at_k", schedule[pos].0);
        schedule.truncate(pos);
    }
    if schedule.is_empty() {
        return Err(GeoError::InvalidParameter("no λ_k fits the point budget".into()));
    }
    let means = schedule
        .iter()
        .map(|&(k, l)| {
            let cal_seed = seed.child(1).child(k as u64);
            let v = try_map_indexed(cfg.calibration_reps, |r| {
                let s = cal_seed.child(r as u64);
                let c = NestedCoupling::new(s.child(0), cfg.model.density.clone()).sample(l)?;
                let c = cfg.model.attach(&c, &s.child(1), true)?;
                cfg.model.pairing(&c, l, &s.child(2))
            })?;
            Ok(crate::estimate::Estimate::from_samples(&v))
        })
        .collect::<Result<Vec<_>>>()?;

    struct Path {
        values: Vec<f64>,
        nested: bool,
    }
    let paths = try_map_indexed(cfg.seeds, |i| {
        let s = seed.child(2).child(i as u64);
        let coupling = NestedCoupling::new(s.child(0), cfg.model.density.clone());
        let mut values = Vec::with_capacity(schedule.len());
        let mut prev: Option<(PointConfiguration, f64)> = None;
        let mut is_nested = true;
        for (j, &(_, l)) in schedule.iter().enumerate() {
            let c = coupling.sample(l)?;
            if let Some((p, pl)) = &prev {
                is_nested &= nested(p, *pl, &c, l, d);
            }
            let marked = cfg.model.attach(&c, &s.child(1), true)?;
            let x = cfg.model.pairing(&marked, l, &s.child(2))?;
            let alpha = AlphaRule::LogLog.alpha(l);
            values.push((x - means[j].value) / (alpha * l.sqrt()));
            prev = Some((c, l));
        }
        Ok::<_, GeoError>(Path { values, nested: is_nested })
    })?;

    let mut cols = vec!["seed".to_string()];
    for &(k, _) in &schedule {
        cols.push(format!("k{k}"));
    }
    let mut table = Table { columns: cols, rows: Vec::new() };
    let mut within = 0;
    let mut monotone = true;
    let mut all_nested = true;
    let mut worst: f64 = 0.0;
    for (i, p) in paths.iter().enumerate() {
        let mut row = vec![i as f64];
        row.extend(&p.values);
        table.push(row);
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut his, mut los) = (Vec::new(), Vec::new());
        for &v in &p.values {
            hi = hi.max(v);
            lo = lo.min(v);
            his.push(hi);
            los.push(lo);
        }
        monotone &= his.windows(2).all(|w| w[1] >= w[0]) && los.windows(2).all(|w| w[1] <= w[0]);
        let m = p.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        worst = worst.max(m);
        if m <= bound {
            within += 1;
        }
        all_nested &= p.nested;
        if i == 0 {
            report.cell("running_max_seed_0", his);
            report.cell("running_min_seed_0", los);
        }
    }
    report.tables.insert("trajectories".into(), table);
    let mut ktable = Table::new(&["k", "lambda", "alpha", "calibration_mean", "calibration_se"]);
    for (&(k, l), m) in schedule.iter().zip(&means) {
        ktable.push(vec![k as f64, l, AlphaRule::LogLog.alpha(l), m.value, m.std_error]);
    }
    report.tables.insert("schedule".into(), ktable);
    let frac = within as f64 / cfg.seeds as f64;
    report.cell("largest_abs_value", worst);
    report.verdict(Verdict::new("nesting_exact", all_nested, f64::from(u8::from(all_nested)), "structure", 1.0));
    report.verdict(Verdict::new("running_extremes_monotone", monotone, f64::from(u8::from(monotone)), "structure", 1.0));
    report.verdict(
        Verdict::new("bounded_fraction", frac >= cfg.tolerances.coverage, frac, "tolerances.coverage", cfg.tolerances.coverage)
            .with_detail(format!("bound {bound} = {} · √(2Σ)", cfg.tolerances.bound_factor)),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::FunctionalSpec;
    use crate::processes::DensitySpec;

    #[test]
    fn trivial_trajectory_is_the_centred_bump_sum() {
        let f = TestFunction::BoundaryBump { margin: 1.0 / 3.0 };
        let cfg = LilConfig {
            model: Model { functional: FunctionalSpec::trivial(), density: DensitySpec::uniform(1), test_function: f.clone() },
            rho: 2.0,
            k_max: 10,
            seeds: 3,
            calibration_reps: 10,
            sigma: TableSource::Exact { value: 0.1 },
            point_budget: 1e6,
            tolerances: LilTolerances { bound_factor: 2.0, coverage: 0.5 },
        };
        let r = lil_trajectory(&cfg, 12).unwrap();
        let schedule = &r.tables["schedule"].rows;
        for (i, row) in r.tables["trajectories"].rows.iter().enumerate() {
            let coupling = NestedCoupling::new(SeedSpec::new(12).child(2).child(i as u64).child(0), DensitySpec::uniform(1));
            for (j, s) in schedule.iter().enumerate() {
                let (l, alpha, mean) = (s[1], s[2], s[3]);
                let c = coupling.sample(l).unwrap();
                let direct: f64 = c.points.iter().map(|p| f.eval(&p.position, 1)).sum();
                assert_eq!(row[j + 1], (direct - mean) / (alpha * l.sqrt()));
            }
        }
    }
}
