//! Germ-grain volume scores: L(x; X) is the volume of the grain union
//! inside x's Voronoi cell (and the window).
//!
//! A position owned by x and covered by the grain of some u satisfies
//! |y − x| <= |y − u| <= T_max, so sampling the box of half-width T_max
//! around x is unbiased.

use rand::Rng;

use crate::error::{GeoError, Result};
use crate::estimate::Estimate;
use crate::geometry::{Boundary, CellIndex, PointId, Position, Window};
use crate::processes::PointConfiguration;
use crate::rng::SeedSpec;

pub(crate) const MIN_MC_SAMPLES: usize = 100;

fn grain_index(config: &PointConfiguration, t_max: f64) -> Result<(CellIndex, Vec<f64>)> {
    let radii: Vec<f64> = config.points.iter().map(|p| p.radius()).collect::<Result<_>>()?;
    let pos: Vec<Position> = config.positions();
    let idx = CellIndex::new(&config.window, &pos, &config.ids(), t_max.max(1e-9));
    Ok((idx, radii))
}

fn covered(index: &CellIndex, radii: &[f64], t_max: f64, y: &Position) -> bool {
    let mut hit = false;
    index.for_each_within(y, t_max, |j, d2| {
        if d2 <= radii[j] * radii[j] {
            hit = true;
        }
    });
    hit
}

fn sample_box(w: &Window, centre: &Position, half: f64) -> ([f64; 3], [f64; 3]) {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for i in 0..w.dim {
        match w.boundary {
            Boundary::HardWall => {
                lo[i] = (centre[i] - half).max(w.lower[i]);
                hi[i] = (centre[i] + half).min(w.upper[i]);
            }
            Boundary::Torus if 2.0 * half >= w.side(i) => {
                lo[i] = w.lower[i];
                hi[i] = w.upper[i];
            }
            Boundary::Torus => {
                lo[i] = centre[i] - half;
                hi[i] = centre[i] + half;
            }
        }
    }
    (lo, hi)
}

fn wrap(w: &Window, y: &mut Position) {
    if w.boundary == Boundary::Torus {
        for i in 0..w.dim {
            let l = w.side(i);
            y[i] = w.lower[i] + (y[i] - w.lower[i]).rem_euclid(l);
        }
    }
}

fn point_volume(
    config: &PointConfiguration,
    index: &CellIndex,
    radii: &[f64],
    k: usize,
    t_max: f64,
    n_mc: usize,
    seed: &SeedSpec,
) -> Estimate {
    let w = &config.window;
    let (lo, hi) = sample_box(w, &config.points[k].position, t_max);
    let vol: f64 = (0..w.dim).map(|i| hi[i] - lo[i]).product();
    let mut rng = seed.child(config.points[k].id).rng();
    let mut hits = 0usize;
    for _ in 0..n_mc {
        let mut y = [0.0; 3];
        for i in 0..w.dim {
            y[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
        }
        wrap(w, &mut y);
        if !covered(index, radii, t_max, &y) {
            continue;
        }
        if index.nearest(&y, None).map(|(j, _)| j) == Some(k) {
            hits += 1;
        }
    }
    let p = hits as f64 / n_mc as f64;
    Estimate::new(p * vol, vol * (p * (1.0 - p) / n_mc as f64).sqrt(), n_mc)
}

/// Monte Carlo L(x; X) for every point of an already rescaled
/// configuration.
pub fn germ_grain_scores(config: &PointConfiguration, t_max: f64, n_mc: usize, seed: &SeedSpec) -> Result<Vec<f64>> {
    if n_mc < MIN_MC_SAMPLES {
        return Err(GeoError::InvalidParameter(format!("need at least {MIN_MC_SAMPLES} MC samples, got {n_mc}")));
    }
    let (index, radii) = grain_index(config, t_max)?;
    Ok((0..config.len()).map(|k| point_volume(config, &index, &radii, k, t_max, n_mc, seed).value).collect())
}

/// L_λ(x; X) for the point with the given id, with its MC standard error.
pub fn germ_grain_volume(
    config: &PointConfiguration,
    id: PointId,
    lambda: f64,
    n_mc: usize,
    seed: &SeedSpec,
) -> Result<Estimate> {
    if n_mc < MIN_MC_SAMPLES {
        return Err(GeoError::InvalidParameter(format!("need at least {MIN_MC_SAMPLES} MC samples, got {n_mc}")));
    }
    if config.is_empty() {
        return Err(GeoError::EmptyConfiguration);
    }
    let k = config.index_of(id).ok_or_else(|| GeoError::InconsistentInput(format!("no point with id {id}")))?;
    let scaled = config.scaled(lambda.powf(1.0 / config.dim() as f64));
    let t_max = scaled.points.iter().map(|p| p.radius()).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    let (index, radii) = grain_index(&scaled, t_max)?;
    Ok(point_volume(&scaled, &index, &radii, k, t_max, n_mc, seed))
}

/// Hit-or-miss volume of (grain union) ∩ window, independent of any
/// Voronoi bookkeeping.
pub fn union_volume_mc(config: &PointConfiguration, n: usize, seed: &SeedSpec) -> Result<Estimate> {
    let t_max = config.points.iter().map(|p| p.radius()).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    let (index, radii) = grain_index(config, t_max)?;
    crate::geometry::mc_region_volume(|y| covered(&index, &radii, t_max, y), &config.window, n, seed)
}

/// Deterministic lattice version: the window is cut into cubes of side
/// about `h` and each covered cube centre credits its volume to its
/// Voronoi owner.
pub fn germ_grain_lattice_scores(config: &PointConfiguration, t_max: f64, h: f64) -> Result<Vec<f64>> {
    let (index, radii) = grain_index(config, t_max)?;
    let w = &config.window;
    let d = w.dim;
    let mut n = [1usize; 3];
    let mut step = [1.0; 3];
    for i in 0..d {
        n[i] = (w.side(i) / h).ceil().max(1.0) as usize;
        step[i] = w.side(i) / n[i] as f64;
    }
    let cell_vol: f64 = step[..d].iter().product();
    let mut scores = vec![0.0; config.len()];
    for a in 0..n[0] {
        for b in 0..n[1] {
            for c in 0..n[2] {
                let mut z = [0.0; 3];
                for (i, &j) in [a, b, c].iter().enumerate().take(d) {
                    z[i] = w.lower[i] + (j as f64 + 0.5) * step[i];
                }
                if covered(&index, &radii, t_max, &z) {
                    if let Some((k, _)) = index.nearest(&z, None) {
                        scores[k] += cell_vol;
                    }
                }
            }
        }
    }
    Ok(scores)
}
