//! Exact samples of the tilted process with Papangelou intensity
//! λκ(x)·exp(u Δ_f(x, X)), where Δ_f is the change of ⟨f, μ^ξ⟩ caused by
//! adding x.
//!
//! Proposals come from a dominating birth-death process of birth rate λb
//! and unit death rate; a proposal at x is kept when its uniform mark β
//! falls below κ(x)·exp(u Δ_f)/b. The state at time 0 is found by
//! dominated coupling from the past: upper and lower processes start from
//! the dominating state and from ∅ at time −T, each birth is accepted into
//! them using the largest and smallest acceptance probability over all
//! states between them, and T doubles until the two agree at 0. An empty
//! epoch of the dominating process forces agreement, so this never looks
//! further back than the first empty epoch, and usually much less.

mod derivative;
mod dominating;
mod increment;

use serde::{Deserialize, Serialize};

pub use derivative::{tilt_derivative_check, tilt_derivative_check_with, DerivativeReport, DerivativeRow};

use crate::error::{GeoError, Result};
use crate::functionals::{CausalCluster, FunctionalKind, FunctionalSpec};
use crate::geometry::{dist2, Position, Window};
use crate::measures::TestFunction;
use crate::processes::{DensitySpec, MarkedPoint, PointConfiguration};
use crate::rng::SeedSpec;

use dominating::Dominating;
use increment::Context;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltParams {
    pub u: f64,
    pub f: TestFunction,
    pub functional: FunctionalSpec,
}

impl TiltParams {
    pub fn new(u: f64, f: TestFunction, functional: FunctionalSpec) -> Self {
        Self { u, f, functional }
    }

    pub fn with_u(&self, u: f64) -> Self {
        Self { u, ..self.clone() }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.u) {
            return Err(GeoError::InvalidParameter(format!("u must lie in [0, 1], got {}", self.u)));
        }
        self.f.validate(d)?;
        self.functional.validate()?;
        match self.functional.kind {
            FunctionalKind::GermGrainVolume { .. } | FunctionalKind::NnThreshold { .. } | FunctionalKind::NnDegree { .. } => {}
            _ => {
                return Err(GeoError::InvalidParameter(format!(
                    "{} has no bounded-increment constant and cannot be tilted",
                    self.functional.name()
                )))
            }
        }
        match self.functional.increment_bound(d) {
            Some(c) if c > 0.0 && c.is_finite() => Ok(()),
            _ => Err(GeoError::InvalidParameter("increment bound C_ξ must be positive".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsOptions {
    /// Largest look-back in time units.
    pub max_horizon: f64,
    /// Lattice spacing (rescaled units) for germ-grain volumes.
    pub lattice_step: f64,
    /// Enumerate all states between the bounds when at most this many
    /// undecided points are in range.
    pub max_enumeration: usize,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        Self { max_horizon: 65536.0, lattice_step: 0.05, max_enumeration: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// β < a/b: accepted whatever the current state.
    Regular,
    Exceptional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthEvent {
    pub id: u64,
    pub time: f64,
    pub position: Position,
    pub lifetime: f64,
    pub beta: f64,
    pub kind: EventKind,
    pub accepted: bool,
}

/// Births of the final coupling run, in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathTrajectory {
    pub events: Vec<BirthEvent>,
    /// Start of the run, −T.
    pub horizon: f64,
    /// Dominating points already alive at the start.
    pub initially_alive: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltedSample {
    pub config: PointConfiguration,
    pub low: PointConfiguration,
    pub high: PointConfiguration,
    pub trajectory: BirthDeathTrajectory,
    /// a and b.
    pub bounds: (f64, f64),
}

fn make_context<'a>(tilt: &'a TiltParams, lambda: f64, kappa: &DensitySpec, opts: &GibbsOptions) -> Result<(Context<'a>, f64, f64)> {
    let d = kappa.dim();
    tilt.validate(d)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(GeoError::InvalidParameter(format!("λ must be positive, got {lambda}")));
    }
    let k_min = kappa.min_bound();
    if !(k_min > 0.0) {
        return Err(GeoError::DegenerateDensity("tilted sampling needs κ bounded away from zero".into()));
    }
    let c = tilt.functional.increment_bound(d).unwrap_or(0.0);
    let reach = tilt.f.sup_norm() * c;
    let global = tilt.u * reach;
    let a = (-global).exp() * k_min;
    let b = global.exp() * kappa.max_bound();
    let scale = lambda.powf(1.0 / d as f64);
    let ctx = Context {
        tilt,
        d,
        window: Window::unit(d),
        scale,
        range: tilt.functional.interaction_range().map(|r| r / scale),
        lattice_step: opts.lattice_step,
        max_enumeration: opts.max_enumeration,
        global,
        reach,
    };
    Ok((ctx, a, b))
}

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Out,
    Upper,
    Both,
}

/// One coupled run from −T. Returns the lower set at 0 if it met the upper.
fn run_from(
    ctx: &Context,
    dom: &Dominating,
    t: f64,
    kappa: &DensitySpec,
    a: f64,
    b: f64,
) -> Result<Option<(Vec<usize>, Vec<BirthEvent>, usize)>> {
    let start = -t;
    let mut status = vec![Status::Out; dom.points.len()];
    let mut alive: Vec<usize> = Vec::new();
    let mut events: Vec<(f64, bool, usize)> = Vec::new();
    for (i, p) in dom.points.iter().enumerate() {
        if p.birth <= start && p.death > start {
            status[i] = Status::Upper;
            alive.push(i);
        } else if p.birth > start && p.birth <= 0.0 {
            events.push((p.birth, true, i));
        }
        if p.death > start && p.death <= 0.0 {
            events.push((p.death, false, i));
        }
    }
    let initially_alive = alive.len();
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.cmp(&y.2)));
    let trivial = ctx.global == 0.0;
    let mut log = Vec::new();
    for (time, is_birth, i) in events {
        let p = &dom.points[i];
        if !is_birth {
            if status[i] != Status::Out {
                status[i] = Status::Out;
                alive.retain(|&j| j != i);
            }
            continue;
        }
        let k = kappa.eval(&p.point.position);
        let regular = p.beta < a / b;
        let new = if regular {
            Status::Both
        } else if trivial || p.beta >= k * ctx.global.exp() / b {
            if p.beta < k / b { Status::Both } else { Status::Out }
        } else {
            let lower: Vec<&MarkedPoint> = alive.iter().filter(|&&j| status[j] == Status::Both).map(|&j| &dom.points[j].point).collect();
            let unsure: Vec<&MarkedPoint> = alive.iter().filter(|&&j| status[j] == Status::Upper).map(|&j| &dom.points[j].point).collect();
            let (lo, hi) = ctx.delta_bounds(&p.point, &lower, &unsure)?;
            let p_lo = k * (ctx.tilt.u * lo).exp() / b;
            let p_hi = k * (ctx.tilt.u * hi).exp() / b;
            if !(p_lo >= 0.0 && p_hi <= 1.0 + 1e-9 && p_lo <= p_hi + 1e-12) {
                return Err(GeoError::InternalInvariant(format!(
                    "acceptance probability bounds [{p_lo}, {p_hi}] leave [0, 1]"
                )));
            }
            if p.beta < p_lo {
                Status::Both
            } else if p.beta < p_hi {
                Status::Upper
            } else {
                Status::Out
            }
        };
        if new != Status::Out {
            status[i] = new;
            alive.push(i);
        }
        log.push(BirthEvent {
            id: p.point.id,
            time,
            position: p.point.position,
            lifetime: p.death - p.birth,
            beta: p.beta,
            kind: if regular { EventKind::Regular } else { EventKind::Exceptional },
            accepted: new == Status::Both,
        });
    }
    if alive.iter().any(|&j| status[j] == Status::Upper) {
        return Ok(None);
    }
    alive.sort_unstable();
    Ok(Some((alive, log, initially_alive)))
}

pub fn sample_tilted_full(tilt: &TiltParams, lambda: f64, kappa: &DensitySpec, seed: &SeedSpec, opts: &GibbsOptions) -> Result<TiltedSample> {
    let (ctx, a, b) = make_context(tilt, lambda, kappa, opts)?;
    let plan = tilt.functional.needs_marks().then(|| tilt.functional.mark_plan());
    let mut dom = Dominating::new(lambda * b, ctx.window, seed, plan)?;
    let mut t = 1.0;
    loop {
        dom.extend_to(t)?;
        if let Some((alive, events, initially_alive)) = run_from(&ctx, &dom, t, kappa, a, b)? {
            let pick = |idx: &mut dyn Iterator<Item = usize>| {
                let pts = idx.map(|i| dom.points[i].point.clone()).collect();
                PointConfiguration::unchecked(ctx.window, pts).with_label(lambda)
            };
            let config = pick(&mut alive.iter().copied());
            let high_idx: Vec<usize> = (0..dom.points.len()).filter(|&i| dom.points[i].birth <= 0.0 && dom.points[i].death > 0.0).collect();
            let low_idx: Vec<usize> = high_idx.iter().copied().filter(|&i| dom.points[i].beta < a / b).collect();
            let (low, high) = (pick(&mut low_idx.iter().copied()), pick(&mut high_idx.iter().copied()));
            let contains = |outer: &[usize], inner: &[usize]| inner.iter().all(|i| outer.binary_search(i).is_ok());
            if !contains(&alive, &low_idx) || !contains(&high_idx, &alive) {
                return Err(GeoError::InternalInvariant("sandwich inclusion violated".into()));
            }
            let trajectory = BirthDeathTrajectory { events, horizon: -t, initially_alive };
            return Ok(TiltedSample { config, low, high, trajectory, bounds: (a, b) });
        }
        if t >= opts.max_horizon {
            return Err(GeoError::HorizonExceeded { cap: opts.max_horizon });
        }
        t *= 2.0;
    }
}

/// An exact sample of the tilted process on the unit cube.
pub fn sample_tilted(tilt: &TiltParams, lambda: f64, kappa: &DensitySpec, seed: &SeedSpec) -> Result<PointConfiguration> {
    Ok(sample_tilted_full(tilt, lambda, kappa, seed, &GibbsOptions::default())?.config)
}

/// P_{λa} ⊆ tilted ⊆ P_{λb}, all read off one dominating trajectory.
pub fn sandwich_triple(
    tilt: &TiltParams,
    lambda: f64,
    kappa: &DensitySpec,
    seed: &SeedSpec,
) -> Result<(PointConfiguration, PointConfiguration, PointConfiguration)> {
    let s = sample_tilted_full(tilt, lambda, kappa, seed, &GibbsOptions::default())?;
    Ok((s.low, s.config, s.high))
}

/// ⟨f, μ^ξ_λ(X)⟩ with the same scores the sampler tilts by.
pub fn tilt_statistic(tilt: &TiltParams, config: &PointConfiguration, lambda: f64, opts: &GibbsOptions) -> Result<f64> {
    let d = config.dim();
    let scale = lambda.powf(1.0 / d as f64);
    let ctx = Context {
        tilt,
        d,
        window: config.window,
        scale,
        range: None,
        lattice_step: opts.lattice_step,
        max_enumeration: 0,
        global: 0.0,
        reach: 0.0,
    };
    if config.is_empty() {
        return Ok(0.0);
    }
    ctx.statistic(config)
}

/// The points whose fate the acceptance of `id` had to consult: an
/// exceptional birth depends on every point alive within `range` (unit
/// coordinates) when it was born, and recursively on theirs. Regular
/// births depend on nothing.
pub fn clan_of_ancestors(trajectory: &BirthDeathTrajectory, id: u64, range: f64) -> Result<CausalCluster> {
    let by_id = |q: u64| trajectory.events.iter().position(|e| e.id == q);
    let start = by_id(id).ok_or_else(|| GeoError::InconsistentInput(format!("no birth with id {id} in the trajectory")))?;
    let mut member = vec![false; trajectory.events.len()];
    member[start] = true;
    let mut stack = vec![start];
    while let Some(k) = stack.pop() {
        let e = &trajectory.events[k];
        if e.kind == EventKind::Regular {
            continue;
        }
        for (j, o) in trajectory.events.iter().enumerate() {
            if !member[j] && o.time < e.time && o.time + o.lifetime > e.time && dist2(&o.position, &e.position) <= range * range {
                member[j] = true;
                stack.push(j);
            }
        }
    }
    let members: Vec<usize> = (0..member.len()).filter(|&k| member[k]).collect();
    let mut diameter: f64 = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            diameter = diameter.max(dist2(&trajectory.events[i].position, &trajectory.events[j].position).sqrt());
        }
    }
    let mut ids: Vec<u64> = members.iter().map(|&k| trajectory.events[k].id).collect();
    ids.sort_unstable();
    Ok(CausalCluster { ids, diameter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{attach_marks, sample_homogeneous_poisson, MarkDist};
    use crate::stats;

    fn nn_tilt(u: f64) -> TiltParams {
        TiltParams::new(u, TestFunction::one(), FunctionalSpec::nn_threshold(0.5))
    }

    #[test]
    fn validation() {
        assert!(TiltParams::new(1.5, TestFunction::one(), FunctionalSpec::nn_threshold(0.5)).validate(1).is_err());
        assert!(TiltParams::new(0.1, TestFunction::one(), FunctionalSpec::rsa()).validate(1).is_err());
        assert!(nn_tilt(0.3).validate(2).is_ok());
        let k = DensitySpec::new(
            crate::processes::DensityVariant::ProductPolynomial { coeffs: vec![vec![0.0, 2.0]] },
            1,
        )
        .unwrap();
        assert!(matches!(sample_tilted(&nn_tilt(0.1), 10.0, &k, &SeedSpec::new(1)), Err(GeoError::DegenerateDensity(_))));
    }

    #[test]
    fn untilted_constant_density_gives_identical_sandwich() {
        let k = DensitySpec::uniform(1);
        for s in 0..20 {
            let (low, mid, high) = sandwich_triple(&nn_tilt(0.0), 15.0, &k, &SeedSpec::new(s)).unwrap();
            assert_eq!(low, mid);
            assert_eq!(mid, high);
        }
        let zero_f = TiltParams::new(0.7, TestFunction::Constant { value: 0.0 }, FunctionalSpec::nn_threshold(0.5));
        let (low, mid, high) = sandwich_triple(&zero_f, 15.0, &k, &SeedSpec::new(3)).unwrap();
        assert_eq!(low.ids(), high.ids());
        assert_eq!(mid.ids(), high.ids());
    }

    #[test]
    fn tilted_samples_are_sandwiched_and_reproducible() {
        let k = DensitySpec::uniform(1);
        for s in 0..30 {
            let a = sample_tilted_full(&nn_tilt(0.3), 20.0, &k, &SeedSpec::new(s), &GibbsOptions::default()).unwrap();
            let b = sample_tilted_full(&nn_tilt(0.3), 20.0, &k, &SeedSpec::new(s), &GibbsOptions::default()).unwrap();
            assert_eq!(a, b);
            let mid = a.config.ids();
            assert!(a.low.ids().iter().all(|i| mid.contains(i)));
            assert!(mid.iter().all(|i| a.high.ids().contains(i)));
        }
    }

    #[test]
    fn nn_bounds_collapse_to_the_exact_increment() {
        let tilt = TiltParams::new(0.2, TestFunction::CosineProduct { frequencies: vec![1, 2] }, FunctionalSpec::nn_threshold(0.8));
        let k = DensitySpec::uniform(2);
        let (ctx, _, _) = make_context(&tilt, 30.0, &k, &GibbsOptions::default()).unwrap();
        for s in 0..50 {
            let cfg = sample_homogeneous_poisson(30.0, &Window::unit(2), &SeedSpec::new(s)).unwrap();
            let (x, rest) = cfg.points.split_last().unwrap();
            let refs: Vec<&MarkedPoint> = rest.iter().collect();
            let exact = ctx.delta(x, &refs).unwrap();
            let mut pts: Vec<MarkedPoint> = rest.to_vec();
            let full_without = ctx.statistic(&PointConfiguration::unchecked(ctx.window, pts.clone())).unwrap();
            pts.push(x.clone());
            let full_with = ctx.statistic(&PointConfiguration::unchecked(ctx.window, pts)).unwrap();
            assert!((exact - (full_with - full_without)).abs() < 1e-12);
            let (lo, hi) = ctx.nn_bounds(x, &refs, &[], 0.8);
            assert!((lo - exact).abs() < 1e-12 && (hi - exact).abs() < 1e-12);
            // splitting the configuration into certain and undecided points
            let (l, u): (Vec<&MarkedPoint>, Vec<&MarkedPoint>) = refs.iter().partition(|p| p.id % 3 != 0);
            let (lo, hi) = ctx.nn_bounds(x, &l, &u, 0.8);
            for mask in 0u32..(1 << u.len().min(12)) {
                let mut set = l.clone();
                set.extend(u.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| *p));
                if u.len() <= 12 {
                    let v = ctx.delta(x, &set).unwrap();
                    assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
        }
    }

    #[test]
    fn germ_grain_increments_are_bounded() {
        let spec = FunctionalSpec::germ_grain(MarkDist::Uniform { low: 0.3, high: 0.6 }, 200);
        let tilt = TiltParams::new(0.5, TestFunction::Coordinate { axis: 1 }, spec.clone());
        let k = DensitySpec::uniform(2);
        let (ctx, _, _) = make_context(&tilt, 20.0, &k, &GibbsOptions::default()).unwrap();
        let c = spec.increment_bound(2).unwrap();
        for s in 0..20 {
            let cfg = sample_homogeneous_poisson(20.0, &Window::unit(2), &SeedSpec::new(s)).unwrap();
            let cfg = attach_marks(&cfg, &spec.mark_plan(), &SeedSpec::new(1000 + s)).unwrap();
            let (x, rest) = cfg.points.split_last().unwrap();
            let refs: Vec<&MarkedPoint> = rest.iter().collect();
            assert!(ctx.delta(x, &refs).unwrap().abs() <= c);
        }
        let sample = sample_tilted_full(&tilt.with_u(0.1), 10.0, &k, &SeedSpec::new(4), &GibbsOptions::default()).unwrap();
        assert!(sample.config.points.iter().all(|p| p.grain_radius.is_some()));
    }

    #[test]
    fn positive_tilt_raises_the_mean() {
        let k = DensitySpec::uniform(1);
        let stat = |u: f64, s: u64| {
            let t = nn_tilt(u);
            let c = sample_tilted(&t, 20.0, &k, &SeedSpec::new(s)).unwrap();
            tilt_statistic(&t, &c, 20.0, &GibbsOptions::default()).unwrap()
        };
        let base: Vec<f64> = (0..400).map(|s| stat(0.0, s)).collect();
        let up: Vec<f64> = (0..400).map(|s| stat(0.4, 10_000 + s)).collect();
        let se = ((stats::variance(&base) + stats::variance(&up)) / 400.0).sqrt();
        assert!(stats::mean(&up) >= stats::mean(&base) - 3.0 * se);
    }

    #[test]
    fn clans_of_regular_births_are_trivial() {
        let k = DensitySpec::uniform(1);
        let s = sample_tilted_full(&nn_tilt(0.5), 20.0, &k, &SeedSpec::new(8), &GibbsOptions::default()).unwrap();
        for e in &s.trajectory.events {
            let clan = clan_of_ancestors(&s.trajectory, e.id, 0.05).unwrap();
            assert!(clan.ids.contains(&e.id));
            if e.kind == EventKind::Regular {
                assert_eq!(clan.ids.len(), 1);
            }
        }
    }
}
