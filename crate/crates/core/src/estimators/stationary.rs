//! V(τ) and δ(τ) for a homogeneous Poisson process, estimated around the
//! origin of a box [−S, S]^d.
//!
//! The default V route works from the palm identity
//! τ∫E[ξ(0;P∪{0,y}) ξ(y;P∪{0,y})] dy = E[ξ(0;P∪0) Σ_{y∈P} ξ(y;P∪0)],
//! which turns the pair integral into per-shell sums over one sample of
//! P∪0. The insertion route places an explicit second point on each shell
//! in 8 stratified directions and is much slower; both agree in law.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::estimate::Estimate;
use crate::functionals::{score_rescaled, FunctionalKind, FunctionalSpec};
use crate::geometry::{ball_volume, check_dim, unit_ball_volume, Boundary, Position, Window};
use crate::par::try_map_indexed;
use crate::processes::{attach_marks, sample_homogeneous_poisson, MarkedPoint, PointConfiguration};
use crate::rng::SeedSpec;
use crate::stats;

use super::tables::DeltaRoute;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VRoute {
    /// Shell sums over P∪0.
    Palm,
    /// Explicit insertion of a second point per shell.
    Insertion,
}

/// Geometry and sample size shared by the stationary estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryConfig {
    pub dim: usize,
    /// Half side S of the sampling box.
    pub half_width: f64,
    /// Outer radii of the shells, increasing, inside (0, S].
    pub shells: Vec<f64>,
    pub reps: usize,
    /// A shell counts as negligible below this fraction of the first shell.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Number of consecutive negligible shells that ends the integral.
    #[serde(default = "default_run")]
    pub quiet_run: usize,
}

fn default_rel_tol() -> f64 {
    1e-3
}

fn default_run() -> usize {
    3
}

impl StationaryConfig {
    /// Shells of equal width out to S.
    pub fn uniform(dim: usize, half_width: f64, width: f64, reps: usize) -> Self {
        let n = (half_width / width).floor().max(1.0) as usize;
        let shells = (1..=n).map(|j| j as f64 * width).collect();
        Self { dim, half_width, shells, reps, rel_tol: 1e-3, quiet_run: 3 }
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        if !(self.half_width > 0.0) {
            return Err(GeoError::InvalidParameter("S must be positive".into()));
        }
        if self.shells.is_empty()
            || self.shells[0] <= 0.0
            || self.shells.windows(2).any(|w| !(w[1] > w[0]))
            || *self.shells.last().unwrap() > self.half_width
        {
            return Err(GeoError::InvalidParameter("shell radii must increase inside (0, S]".into()));
        }
        if self.reps < 10 {
            return Err(GeoError::InsufficientData { needed: 10, got: self.reps });
        }
        if !(self.rel_tol >= 0.0) || self.quiet_run == 0 {
            return Err(GeoError::InvalidParameter("truncation rule needs rel_tol >= 0 and quiet_run >= 1".into()));
        }
        Ok(())
    }

    fn shell_of(&self, r: f64) -> Option<usize> {
        let j = self.shells.partition_point(|&s| s <= r);
        (j < self.shells.len()).then_some(j)
    }

    fn shell_volume(&self, j: usize) -> f64 {
        let inner = if j == 0 { 0.0 } else { self.shells[j - 1] };
        ball_volume(self.shells[j], self.dim) - ball_volume(inner, self.dim)
    }
}

/// One replicate seen from the origin.
struct PalmRow {
    /// ξ(0; P∪0).
    a: f64,
    /// Σ ξ(y; P∪0) over y in each shell.
    plus: Vec<f64>,
    /// Σ ξ(y; P) over y in each shell.
    minus: Vec<f64>,
    /// H(P∪0) − H(P) over the whole ball.
    window_diff: f64,
}

fn box_window(cfg: &StationaryConfig) -> Result<Window> {
    Window::centered(cfg.dim, cfg.half_width)
}

/// P_τ ∩ B_S(0) with marks, followed by the origin carrying the last id.
fn sample_with_origin(spec: &FunctionalSpec, tau: f64, cfg: &StationaryConfig, seed: &SeedSpec) -> Result<PointConfiguration> {
    let window = box_window(cfg)?;
    let s2 = cfg.half_width * cfg.half_width;
    let mut cfg_p = sample_homogeneous_poisson(tau, &window, &seed.child(0))?;
    cfg_p.points.retain(|p| p.position.iter().map(|c| c * c).sum::<f64>() <= s2);
    for (i, p) in cfg_p.points.iter_mut().enumerate() {
        p.id = i as u64;
    }
    let origin = MarkedPoint::new(cfg_p.len() as u64, [0.0; 3]);
    cfg_p.points.push(origin);
    if spec.needs_marks() {
        cfg_p = attach_marks(&cfg_p, &spec.mark_plan(), &seed.child(1))?;
    }
    Ok(cfg_p)
}

fn palm_row(spec: &FunctionalSpec, tau: f64, cfg: &StationaryConfig, seed: &SeedSpec) -> Result<PalmRow> {
    let with = sample_with_origin(spec, tau, cfg, seed)?;
    let n = with.len() - 1;
    let mut without = with.clone();
    without.points.truncate(n);
    let score_seed = seed.child(2);
    let s_with = score_rescaled(spec, &with, &score_seed)?;
    let s_without = score_rescaled(spec, &without, &score_seed)?;
    let mut plus = vec![0.0; cfg.shells.len()];
    let mut minus = vec![0.0; cfg.shells.len()];
    for k in 0..n {
        let r = with.points[k].position.iter().map(|c| c * c).sum::<f64>().sqrt();
        if let Some(j) = cfg.shell_of(r) {
            plus[j] += s_with[k];
            minus[j] += s_without[k];
        }
    }
    let a = s_with[n];
    let window_diff = s_with.iter().sum::<f64>() - s_without.iter().sum::<f64>();
    Ok(PalmRow { a, plus, minus, window_diff })
}

fn palm_rows(spec: &FunctionalSpec, tau: f64, cfg: &StationaryConfig, seed: &SeedSpec) -> Result<Vec<PalmRow>> {
    spec.validate()?;
    cfg.validate()?;
    check_tau(tau)?;
    try_map_indexed(cfg.reps, |r| palm_row(spec, tau, cfg, &seed.child(r as u64)))
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(GeoError::InvalidParameter(format!("τ must be positive, got {tau}")))
    }
}

/// Index one past the last shell kept, and whether the integrand was seen
/// to die out. Shells are kept through the end of the first run of
/// `run` consecutive negligible shells.
fn truncation(terms: &[(f64, f64)], rel_tol: f64, run: usize) -> (usize, bool) {
    let first = terms.first().map_or(0.0, |t| t.0.abs());
    let mut quiet = 0;
    for (j, (v, se)) in terms.iter().enumerate() {
        if v.abs() <= (rel_tol * first).max(2.0 * se).max(1e-14) {
            quiet += 1;
            if quiet == run {
                return (j + 1, true);
            }
        } else {
            quiet = 0;
        }
    }
    (terms.len(), false)
}

fn sd_over_root_n(x: &[f64]) -> f64 {
    if x.len() < 2 {
        0.0
    } else {
        (stats::variance(x) / x.len() as f64).sqrt()
    }
}

/// Assembles a first term plus truncated shell terms from per-replicate
/// influence values.
fn assemble(
    first: f64,
    first_infl: Vec<f64>,
    shell_terms: Vec<f64>,
    shell_infl: Vec<Vec<f64>>,
    cfg: &StationaryConfig,
    tau: f64,
) -> Estimate {
    let n = first_infl.len();
    let terms: Vec<(f64, f64)> = shell_terms.iter().zip(&shell_infl).map(|(&v, psi)| (v, sd_over_root_n(psi))).collect();
    let (keep, converged) = truncation(&terms, cfg.rel_tol, cfg.quiet_run);
    let mut total = first_infl;
    for psi in &shell_infl[..keep] {
        for (t, p) in total.iter_mut().zip(psi) {
            *t += p;
        }
    }
    let value = first + shell_terms[..keep].iter().sum::<f64>();
    let mut est = Estimate::new(value, sd_over_root_n(&total), n)
        .with_meta("tau", tau)
        .with_meta("first_term", first)
        .with_meta("truncation_radius", cfg.shells[keep - 1]);
    if !converged {
        est = est.with_meta("truncation_failure", true);
    }
    est
}

/// V^ξ(τ).
pub fn estimate_v(spec: &FunctionalSpec, tau: f64, cfg: &StationaryConfig, route: VRoute, seed: &SeedSpec) -> Result<Estimate> {
    match route {
        VRoute::Palm => v_palm(spec, tau, cfg, seed),
        VRoute::Insertion => v_insertion(spec, tau, cfg, seed),
    }
}

fn v_palm(spec: &FunctionalSpec, tau: f64, cfg: &StationaryConfig, seed: &SeedSpec) -> Result<Estimate> {
    let rows = palm_rows(spec, tau, cfg, seed)?;
    let n = rows.len() as f64;
    let a: Vec<f64> = rows.iter().map(|r| r.a).collect();
    let a_bar = stats::mean(&a);
    let first_infl: Vec<f64> = a.iter().map(|x| x * x).collect();
    let first = stats::mean(&first_infl);
    let mut terms = Vec::with_capacity(cfg.shells.len());
    let mut infl = Vec::with_capacity(cfg.shells.len());
    for j in 0..cfg.shells.len() {
        let minus: Vec<f64> = rows.iter().map(|r| r.minus[j]).collect();
        let m_bar = stats::mean(&minus);
        let cross = rows.iter().map(|r| r.a * r.plus[j]).sum::<f64>() / n;
        // E[a]E[M⁻] without the diagonal, so the product is unbiased.
        let sum_a: f64 = a.iter().sum();
        let sum_m: f64 = minus.iter().sum();
        let sum_am: f64 = rows.iter().map(|r| r.a * r.minus[j]).sum();
        let product = (sum_a * sum_m - sum_am) / (n * (n - 1.0));
        terms.push(cross - product);
        infl.push(
            rows.iter()
                .map(|r| r.a * (r.plus[j] - r.minus[j]) + (r.a - a_bar) * (r.minus[j] - m_bar))
                .collect(),
        );
    }
    Ok(assemble(first, first_infl, terms, infl, cfg, tau).with_meta("route", "palm"))
}

/// Unit vector in the k-th of 8 direction strata.
fn stratified_direction<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Position {
    match d {
        1 => [if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0, 0.0],
        2 => {
            let phi = 2.0 * PI * (k as f64 + rng.random::<f64>()) / 8.0;
            [phi.cos(), phi.sin(), 0.0]
        }
        _ => {
            let mut v = [0.0; 3];
            for (i, vi) in v.iter_mut().enumerate() {
                let g: f64 = rng.sample(StandardNormal);
                *vi = if (k >> i) & 1 == 1 { -g.abs() } else { g.abs() };
            }
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            v.map(|c| c / norm)
        }
    }
}

const DIRECTIONS: usize = 8;

fn v_insertion(spec: &FunctionalSpec, tau: f64, cfg: &StationaryConfig, seed: &SeedSpec) -> Result<Estimate> {
    spec.validate()?;
    cfg.validate()?;
    check_tau(tau)?;
    let d = cfg.dim;
    let shells = cfg.shells.len();
    // Per replicate: a and the mean over directions of ξ(0)ξ(y) per shell.
    let rows: Vec<(f64, Vec<f64>)> = try_map_indexed(cfg.reps, |r| {
        let rs = seed.child(r as u64);
        let with = sample_with_origin(spec, tau, cfg, &rs)?;
        let n = with.len() - 1;
        let score_seed = rs.child(2);
        let a = score_rescaled(spec, &with, &score_seed)?[n];
        let mut rng = rs.child(3).rng();
        let mut b = vec![0.0; shells];
        for (j, bj) in b.iter_mut().enumerate() {
            let inner = if j == 0 { 0.0 } else { cfg.shells[j - 1] };
            let outer = cfg.shells[j];
            for k in 0..DIRECTIONS {
                let u: f64 = rng.random();
                let rad = (inner.powi(d as i32) + u * (outer.powi(d as i32) - inner.powi(d as i32))).powf(1.0 / d as f64);
                let dir = stratified_direction(d, k, &mut rng);
                let mut y = MarkedPoint::new(n as u64 + 1, dir.map(|c| c * rad));
                if spec.needs_marks() {
                    let single = PointConfiguration::unchecked(with.window, vec![y]);
                    let mark_seed = rs.child(4).child((j * DIRECTIONS + k) as u64);
                    y = attach_marks(&single, &spec.mark_plan(), &mark_seed)?.points.remove(0);
                }
                let mut both = with.clone();
                both.points.push(y);
                let s = score_rescaled(spec, &both, &score_seed)?;
                *bj += s[n] * s[n + 1] / DIRECTIONS as f64;
            }
        }
        Ok((a, b))
    })?;
    let nr = rows.len() as f64;
    let a: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let a_bar = stats::mean(&a);
    let sum_a: f64 = a.iter().sum();
    let sum_a2: f64 = a.iter().map(|x| x * x).sum();
    let a_sq = (sum_a * sum_a - sum_a2) / (nr * (nr - 1.0));
    let first_infl: Vec<f64> = a.iter().map(|x| x * x).collect();
    let first = stats::mean(&first_infl);
    let mut terms = Vec::with_capacity(shells);
    let mut infl = Vec::with_capacity(shells);
    for j in 0..shells {
        let w = tau * cfg.shell_volume(j);
        let b_bar = rows.iter().map(|r| r.1[j]).sum::<f64>() / nr;
        terms.push(w * (b_bar - a_sq));
        infl.push(rows.iter().map(|r| w * (r.1[j] - 2.0 * a_bar * (r.0 - a_bar))).collect());
    }
    Ok(assemble(first, first_infl, terms, infl, cfg, tau).with_meta("route", "insertion"))
}

/// Var[H(P_τ on a torus of side L)] / (τ L^d): the definition of V as a
/// limiting variance, free of boundary effects.
pub fn estimate_v_direct(spec: &FunctionalSpec, tau: f64, dim: usize, side: f64, reps: usize, seed: &SeedSpec) -> Result<Estimate> {
    spec.validate()?;
    check_tau(tau)?;
    if reps < 10 {
        return Err(GeoError::InsufficientData { needed: 10, got: reps });
    }
    let window = Window::cube(dim, side)?.with_boundary(Boundary::Torus);
    let totals: Vec<f64> = try_map_indexed(reps, |r| {
        let rs = seed.child(r as u64);
        let mut cfg = sample_homogeneous_poisson(tau, &window, &rs.child(0))?;
        if spec.needs_marks() {
            cfg = attach_marks(&cfg, &spec.mark_plan(), &rs.child(1))?;
        }
        Ok(score_rescaled(spec, &cfg, &rs.child(2))?.iter().sum())
    })?;
    let vol = tau * window.volume();
    Ok(Estimate::new(stats::variance(&totals) / vol, stats::variance_se(&totals) / vol, reps)
        .with_meta("tau", tau)
        .with_meta("side", side)
        .with_meta("route", "direct"))
}

/// δ^ξ(τ), the mean add-one cost.
pub fn estimate_delta(spec: &FunctionalSpec, tau: f64, route: DeltaRoute, cfg: &StationaryConfig, seed: &SeedSpec) -> Result<Estimate> {
    let rows = palm_rows(spec, tau, cfg, seed)?;
    match route {
        DeltaRoute::Window => {
            let diffs: Vec<f64> = rows.iter().map(|r| r.window_diff).collect();
            Ok(Estimate::from_samples(&diffs).with_meta("tau", tau).with_meta("route", "window"))
        }
        DeltaRoute::Insertion => {
            let a: Vec<f64> = rows.iter().map(|r| r.a).collect();
            let first = stats::mean(&a);
            let mut terms = Vec::with_capacity(cfg.shells.len());
            let mut infl = Vec::with_capacity(cfg.shells.len());
            for j in 0..cfg.shells.len() {
                let diff: Vec<f64> = rows.iter().map(|r| r.plus[j] - r.minus[j]).collect();
                terms.push(stats::mean(&diff));
                infl.push(diff);
            }
            Ok(assemble(first, a, terms, infl, cfg, tau).with_meta("route", "insertion"))
        }
    }
}

/// Closed form of δ for the threshold nearest-neighbour indicator: the
/// origin scores with probability 1 − e^{−a}, and each previously isolated
/// point within t of it starts scoring, which adds a·e^{−a} on average.
pub fn nn_threshold_delta(tau: f64, t: f64, d: usize) -> f64 {
    let a = tau * unit_ball_volume(d) * t.powi(d as i32);
    (1.0 - (-a).exp()) + a * (-a).exp()
}

/// Exact values where the functional leaves nothing to estimate.
pub fn closed_form_v(spec: &FunctionalSpec) -> Option<f64> {
    matches!(spec.kind, FunctionalKind::TrivialOne).then_some(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_functional_is_exact() {
        let cfg = StationaryConfig::uniform(1, 4.0, 0.5, 50);
        let v = estimate_v(&FunctionalSpec::trivial(), 1.0, &cfg, VRoute::Palm, &SeedSpec::new(1)).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12, "{v:?}");
        assert!(v.std_error < 1e-12);
        for route in [DeltaRoute::Window, DeltaRoute::Insertion] {
            let d = estimate_delta(&FunctionalSpec::trivial(), 1.0, route, &cfg, &SeedSpec::new(2)).unwrap();
            assert!((d.value - 1.0).abs() < 1e-12 && d.std_error < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn vanishing_threshold_gives_zero() {
        let cfg = StationaryConfig::uniform(2, 3.0, 0.5, 40);
        let v = estimate_v(&FunctionalSpec::nn_threshold(1e-9), 1.0, &cfg, VRoute::Palm, &SeedSpec::new(3)).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn closed_form_sanity() {
        assert!((nn_threshold_delta(1.0, 0.5, 1) - 1.0).abs() < 1e-15);
        assert!((nn_threshold_delta(1.0, 0.5, 2) - 0.9021548404042884).abs() < 1e-12);
        assert!((nn_threshold_delta(2.0, 0.3, 2) - 0.7531601050353178).abs() < 1e-12);
    }

    #[test]
    fn truncation_rule() {
        let terms = [(1.0, 0.01), (0.5, 0.01), (0.0001, 0.01), (0.0, 0.01), (0.002, 0.01), (0.3, 0.0)];
        assert_eq!(truncation(&terms, 1e-3, 3), (5, true));
        assert_eq!(truncation(&terms[..4], 1e-3, 3), (4, false));
    }

    #[test]
    fn rejects_bad_grids() {
        let mut cfg = StationaryConfig::uniform(1, 2.0, 0.5, 20);
        cfg.shells.push(3.0);
        assert!(cfg.validate().is_err());
        assert!(StationaryConfig::uniform(1, 2.0, 0.5, 5).validate().is_err());
    }

    #[test]
    fn palm_and_insertion_routes_agree_for_nn() {
        let spec = FunctionalSpec::nn_threshold(0.5);
        let cfg = StationaryConfig::uniform(1, 4.0, 0.25, 400);
        let a = estimate_v(&spec, 1.0, &cfg, VRoute::Palm, &SeedSpec::new(5)).unwrap();
        let b = estimate_v(&spec, 1.0, &cfg, VRoute::Insertion, &SeedSpec::new(6)).unwrap();
        assert!(a.z_against(&b) < 4.0, "{a:?} {b:?}");
    }
}
