//! Windows, balls, cell-list neighbour queries and Monte Carlo volumes.
//!
//! Positions are `[f64; 3]` with unused trailing coordinates held at zero,
//! so one code path serves d = 1, 2, 3.
//!
//! Conventions used everywhere else in the crate: range queries are closed
//! balls (`dist <= r`), overlap of two balls is strict (`dist < r1 + r2`),
//! and ties between equidistant points go to the lower id.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::estimate::Estimate;
use crate::processes::PointConfiguration;
use crate::rng::SeedSpec;

pub type Position = [f64; 3];
pub type PointId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    HardWall,
    /// Periodic identification of opposite faces. Diagnostics only.
    Torus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub dim: usize,
    pub lower: Position,
    pub upper: Position,
    #[serde(default)]
    pub boundary: Boundary,
}

pub fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(GeoError::InvalidParameter(format!("dimension must be 1, 2 or 3, got {d}")))
    }
}

impl Window {
    pub fn new(dim: usize, lower: Position, upper: Position) -> Result<Self> {
        check_dim(dim)?;
        for i in 0..dim {
            if !(upper[i] > lower[i]) || !lower[i].is_finite() || !upper[i].is_finite() {
                return Err(GeoError::InvalidParameter(format!(
                    "window axis {i}: need lower < upper, got [{}, {}]",
                    lower[i], upper[i]
                )));
            }
        }
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        lo[..dim].copy_from_slice(&lower[..dim]);
        hi[..dim].copy_from_slice(&upper[..dim]);
        Ok(Self { dim, lower: lo, upper: hi, boundary: Boundary::HardWall })
    }

    pub fn unit(dim: usize) -> Self {
        Self::new(dim, [0.0; 3], [1.0; 3]).expect("unit cube")
    }

    /// `[0, side]^d`.
    pub fn cube(dim: usize, side: f64) -> Result<Self> {
        Self::new(dim, [0.0; 3], [side; 3])
    }

    /// `[-half, half]^d`.
    pub fn centered(dim: usize, half: f64) -> Result<Self> {
        Self::new(dim, [-half; 3], [half; 3])
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|i| self.side(i)).product()
    }

    pub fn contains(&self, x: &Position) -> bool {
        (0..self.dim).all(|i| x[i] >= self.lower[i] && x[i] <= self.upper[i])
    }

    /// The window obtained by multiplying every coordinate by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut w = *self;
        for i in 0..self.dim {
            w.lower[i] *= s;
            w.upper[i] *= s;
        }
        w
    }

    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        let mut x = [0.0; 3];
        for (i, xi) in x.iter_mut().enumerate().take(self.dim) {
            *xi = self.lower[i] + self.side(i) * rng.random::<f64>();
        }
        x
    }

    /// Coordinate difference `a - b` along `axis`, minimum image on a torus.
    #[inline]
    pub fn delta(&self, a: f64, b: f64, axis: usize) -> f64 {
        let d = a - b;
        match self.boundary {
            Boundary::HardWall => d,
            Boundary::Torus => {
                let l = self.side(axis);
                d - l * (d / l).round()
            }
        }
    }

    #[inline]
    pub fn dist2(&self, a: &Position, b: &Position) -> f64 {
        match self.boundary {
            Boundary::HardWall => dist2(a, b),
            Boundary::Torus => (0..self.dim).map(|i| self.delta(a[i], b[i], i).powi(2)).sum(),
        }
    }

    pub fn dist(&self, a: &Position, b: &Position) -> f64 {
        self.dist2(a, b).sqrt()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim).map(|i| self.side(i).powi(2)).sum::<f64>().sqrt()
    }
}

/// Plain Euclidean squared distance (zero padding makes the dimension moot).
#[inline]
pub fn dist2(a: &Position, b: &Position) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Volume of the unit ball in dimension d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("unsupported dimension {d}"),
    }
}

pub fn ball_volume(r: f64, d: usize) -> f64 {
    unit_ball_volume(d) * r.powi(d as i32)
}

/// Surface measure of the sphere of radius r.
pub fn sphere_area(r: f64, d: usize) -> f64 {
    d as f64 * unit_ball_volume(d) * r.powi(d as i32 - 1)
}

/// Radius of the d-ball of volume 1/λ.
pub fn ball_radius_from_volume(lambda: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(GeoError::InvalidParameter(format!("λ must be positive, got {lambda}")));
    }
    Ok((1.0 / (lambda * unit_ball_volume(d))).powf(1.0 / d as f64))
}

/// Immutable cell list over a window.
#[derive(Debug, Clone)]
pub struct CellIndex {
    window: Window,
    cells: [usize; 3],
    width: [f64; 3],
    start: Vec<u32>,
    /// Original indices sorted by cell.
    order: Vec<u32>,
    pos: Vec<Position>,
    ids: Vec<PointId>,
}

const MAX_CELLS: usize = 1 << 22;

impl CellIndex {
    pub fn new(window: &Window, positions: &[Position], ids: &[PointId], cell_size: f64) -> Self {
        assert_eq!(positions.len(), ids.len());
        assert!(cell_size > 0.0, "cell size must be positive");
        let d = window.dim;
        let cap = MAX_CELLS.min((4 * positions.len()).max(64));
        let mut cells = [1usize; 3];
        for i in 0..d {
            cells[i] = ((window.side(i) / cell_size).floor() as usize).max(1);
        }
        while cells.iter().product::<usize>() > cap {
            let i = (0..d).max_by_key(|&i| cells[i]).unwrap();
            cells[i] = (cells[i] / 2).max(1);
        }
        let mut width = [1.0; 3];
        for i in 0..d {
            width[i] = window.side(i) / cells[i] as f64;
        }
        let ncell: usize = cells.iter().product();
        let mut index = Self {
            window: *window,
            cells,
            width,
            start: vec![0; ncell + 1],
            order: Vec::with_capacity(positions.len()),
            pos: positions.to_vec(),
            ids: ids.to_vec(),
        };
        let flat: Vec<usize> = positions.iter().map(|x| index.flat(&index.cell_of(x))).collect();
        for &c in &flat {
            index.start[c + 1] += 1;
        }
        for c in 0..ncell {
            index.start[c + 1] += index.start[c];
        }
        let mut fill = index.start.clone();
        index.order = vec![0; positions.len()];
        for (k, &c) in flat.iter().enumerate() {
            index.order[fill[c] as usize] = k as u32;
            fill[c] += 1;
        }
        index
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn position(&self, k: usize) -> &Position {
        &self.pos[k]
    }

    pub fn id(&self, k: usize) -> PointId {
        self.ids[k]
    }

    /// Integer cell coordinates containing x (clamped into the grid).
    pub fn cell_of(&self, x: &Position) -> [i64; 3] {
        let mut c = [0i64; 3];
        for i in 0..self.window.dim {
            let raw = ((x[i] - self.window.lower[i]) / self.width[i]).floor() as i64;
            c[i] = raw.clamp(0, self.cells[i] as i64 - 1);
        }
        c
    }

    fn flat(&self, c: &[i64; 3]) -> usize {
        (c[0] as usize * self.cells[1] + c[1] as usize) * self.cells[2] + c[2] as usize
    }

    /// Occupied buckets keyed by cell coordinates, with ids in each.
    pub fn buckets(&self) -> BTreeMap<[i64; 3], Vec<PointId>> {
        let mut out: BTreeMap<[i64; 3], Vec<PointId>> = BTreeMap::new();
        for (k, x) in self.pos.iter().enumerate() {
            out.entry(self.cell_of(x)).or_default().push(self.ids[k]);
        }
        for v in out.values_mut() {
            v.sort_unstable();
        }
        out
    }

    fn axis_cells(&self, axis: usize, lo: f64, hi: f64) -> Vec<i64> {
        let n = self.cells[axis] as i64;
        let a = ((lo - self.window.lower[axis]) / self.width[axis]).floor() as i64;
        let b = ((hi - self.window.lower[axis]) / self.width[axis]).floor() as i64;
        match self.window.boundary {
            Boundary::HardWall => (a.max(0)..=b.min(n - 1)).collect(),
            Boundary::Torus => {
                if b - a + 1 >= n {
                    (0..n).collect()
                } else {
                    (a..=b).map(|c| c.rem_euclid(n)).collect()
                }
            }
        }
    }

    /// Calls `visit(k, dist2)` for every indexed point within distance r of x.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, x: &Position, r: f64, mut visit: F) {
        if self.pos.is_empty() || r < 0.0 {
            return;
        }
        let r2 = r * r;
        let d = self.window.dim;
        let mut ranges: [Vec<i64>; 3] = [vec![0], vec![0], vec![0]];
        for (i, range) in ranges.iter_mut().enumerate().take(d) {
            *range = self.axis_cells(i, x[i] - r, x[i] + r);
        }
        for &c0 in &ranges[0] {
            for &c1 in &ranges[1] {
                for &c2 in &ranges[2] {
                    let f = self.flat(&[c0, c1, c2]);
                    for slot in self.start[f]..self.start[f + 1] {
                        let k = self.order[slot as usize] as usize;
                        let d2 = self.window.dist2(x, &self.pos[k]);
                        if d2 <= r2 {
                            visit(k, d2);
                        }
                    }
                }
            }
        }
    }

    /// Internal indices of points within closed distance r of x.
    pub fn within(&self, x: &Position, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(x, r, |k, _| out.push(k));
        out.sort_unstable();
        out
    }

    /// Ids of points within closed distance r of x, sorted.
    pub fn range_query(&self, x: &Position, r: f64) -> Vec<PointId> {
        let mut out = Vec::new();
        self.for_each_within(x, r, |k, _| out.push(self.ids[k]));
        out.sort_unstable();
        out
    }

    fn search_limit(&self) -> f64 {
        match self.window.boundary {
            Boundary::HardWall => self.window.diameter() * 1.01 + 1e-12,
            Boundary::Torus => self.window.diameter() * 0.51 + 1e-12,
        }
    }

    /// The k nearest indexed points to x as `(index, dist2)`, ordered by
    /// distance then id. `exclude` skips one internal index.
    pub fn k_nearest(&self, x: &Position, k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        let available = self.pos.len() - usize::from(exclude.is_some_and(|e| e < self.pos.len()));
        let k = k.min(available);
        if k == 0 {
            return Vec::new();
        }
        let limit = self.search_limit();
        let mut r = self.width[..self.window.dim].iter().cloned().fold(0.0, f64::max);
        loop {
            let r_eff = r.min(limit);
            let mut found: Vec<(usize, f64)> = Vec::new();
            self.for_each_within(x, r_eff, |j, d2| {
                if Some(j) != exclude {
                    found.push((j, d2));
                }
            });
            if found.len() >= k || r_eff >= limit {
                found.sort_by(|a, b| a.1.total_cmp(&b.1).then(self.ids[a.0].cmp(&self.ids[b.0])));
                found.truncate(k);
                return found;
            }
            r *= 2.0;
        }
    }

    /// Nearest indexed point to x, ties by lowest id.
    pub fn nearest(&self, x: &Position, exclude: Option<usize>) -> Option<(usize, f64)> {
        self.k_nearest(x, 1, exclude).into_iter().next()
    }
}

/// Incrementally filled cell grid (head/next linked lists). Cells are at
/// least `reach` wide, so every point within `reach` of x sits in one of
/// the 3^d cells around x's cell.
#[derive(Debug, Clone)]
pub struct InsertGrid {
    window: Window,
    cells: [usize; 3],
    width: [f64; 3],
    head: Vec<u32>,
    next: Vec<u32>,
}

const NIL: u32 = u32::MAX;

impl InsertGrid {
    pub fn new(window: &Window, reach: f64, capacity: usize) -> Self {
        let d = window.dim;
        let cap = MAX_CELLS.min((4 * capacity).max(64));
        let mut cells = [1usize; 3];
        for i in 0..d {
            cells[i] = if reach > 0.0 { ((window.side(i) / reach).floor() as usize).max(1) } else { 1 };
        }
        while cells.iter().product::<usize>() > cap {
            let i = (0..d).max_by_key(|&i| cells[i]).unwrap();
            cells[i] = (cells[i] / 2).max(1);
        }
        let mut width = [1.0; 3];
        for i in 0..d {
            width[i] = window.side(i) / cells[i] as f64;
        }
        Self { window: *window, cells, width, head: vec![NIL; cells.iter().product()], next: vec![NIL; capacity] }
    }

    fn coord(&self, x: f64, axis: usize) -> i64 {
        let c = ((x - self.window.lower[axis]) / self.width[axis]).floor() as i64;
        c.clamp(0, self.cells[axis] as i64 - 1)
    }

    fn flat(&self, c: [i64; 3]) -> usize {
        (c[0] as usize * self.cells[1] + c[1] as usize) * self.cells[2] + c[2] as usize
    }

    pub fn insert(&mut self, k: usize, x: &Position) {
        let mut c = [0i64; 3];
        for (i, ci) in c.iter_mut().enumerate().take(self.window.dim) {
            *ci = self.coord(x[i], i);
        }
        let f = self.flat(c);
        if k >= self.next.len() {
            self.next.resize(k + 1, NIL);
        }
        self.next[k] = self.head[f];
        self.head[f] = k as u32;
    }

    fn neighbours(&self, axis: usize, c: i64) -> ([i64; 3], usize) {
        let n = self.cells[axis] as i64;
        let mut out = [0i64; 3];
        let mut len = 0;
        match self.window.boundary {
            Boundary::HardWall => {
                for v in (c - 1).max(0)..=(c + 1).min(n - 1) {
                    out[len] = v;
                    len += 1;
                }
            }
            Boundary::Torus => {
                for dv in -1..=1 {
                    let v = (c + dv).rem_euclid(n);
                    if !out[..len].contains(&v) {
                        out[len] = v;
                        len += 1;
                    }
                }
            }
        }
        (out, len)
    }

    /// Visits every inserted index in the cells adjacent to x's cell. The
    /// caller applies the exact distance test.
    pub fn for_each_near<F: FnMut(usize)>(&self, x: &Position, mut visit: F) {
        let d = self.window.dim;
        let mut lists = [([0i64; 3], 1usize); 3];
        for (i, list) in lists.iter_mut().enumerate().take(d) {
            *list = self.neighbours(i, self.coord(x[i], i));
        }
        for &a in &lists[0].0[..lists[0].1] {
            for &b in &lists[1].0[..lists[1].1] {
                for &c in &lists[2].0[..lists[2].1] {
                    let mut k = self.head[self.flat([a, b, c])];
                    while k != NIL {
                        visit(k as usize);
                        k = self.next[k as usize];
                    }
                }
            }
        }
    }
}

pub fn build_cell_index(config: &PointConfiguration, cell_size: f64) -> CellIndex {
    let pos: Vec<Position> = config.points.iter().map(|p| p.position).collect();
    let ids: Vec<PointId> = config.points.iter().map(|p| p.id).collect();
    CellIndex::new(&config.window, &pos, &ids, cell_size)
}

pub fn range_query(index: &CellIndex, x: &Position, r: f64) -> Vec<PointId> {
    index.range_query(x, r)
}

/// Id of the configuration point nearest to y, ties by lowest id.
pub fn voronoi_owner(y: &Position, config: &PointConfiguration) -> Result<PointId> {
    let mut best: Option<(f64, PointId)> = None;
    for p in &config.points {
        let d2 = config.window.dist2(y, &p.position);
        let better = match best {
            None => true,
            Some((bd, bid)) => d2 < bd || (d2 == bd && p.id < bid),
        };
        if better {
            best = Some((d2, p.id));
        }
    }
    best.map(|(_, id)| id).ok_or(GeoError::EmptyConfiguration)
}

/// Hit-or-miss volume of `{x in window : membership(x)}`.
pub fn mc_region_volume<F: Fn(&Position) -> bool>(
    membership: F,
    window: &Window,
    n_samples: usize,
    seed: &SeedSpec,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(GeoError::InvalidParameter("n_samples must be at least 1".into()));
    }
    let mut rng = seed.rng();
    let hits = (0..n_samples).filter(|_| membership(&window.uniform_point(&mut rng))).count();
    let p = hits as f64 / n_samples as f64;
    let vol = window.volume();
    let se = vol * (p * (1.0 - p) / n_samples as f64).sqrt();
    Ok(Estimate::new(p * vol, se, n_samples))
}
