//! k-nearest-neighbour graphs and the nearest-neighbour threshold score.

use std::collections::BTreeSet;

use super::ScoreVector;
use crate::error::{GeoError, Result};
use crate::geometry::CellIndex;
use crate::processes::PointConfiguration;

fn index_for(config: &PointConfiguration) -> CellIndex {
    let n = config.len().max(1) as f64;
    let spacing = (config.window.volume() / n).powf(1.0 / config.dim() as f64);
    CellIndex::new(&config.window, &config.positions(), &config.ids(), spacing)
}

/// Directed out-neighbours (NG′) and the symmetrized edge set (NG), both as
/// point indices. Distance ties go to the lower id.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    pub out: Vec<Vec<usize>>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl KnnGraph {
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.out.len()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.out.len()];
        for nbrs in &self.out {
            for &j in nbrs {
                deg[j] += 1;
            }
        }
        deg
    }
}

pub fn knn_graph(config: &PointConfiguration, k: usize) -> Result<KnnGraph> {
    let n = config.len();
    if n < 2 {
        return Err(GeoError::TooFewPoints { needed: 2, got: n });
    }
    if k == 0 {
        return Err(GeoError::InvalidParameter("k must be at least 1".into()));
    }
    let index = index_for(config);
    let mut out = Vec::with_capacity(n);
    let mut edges = BTreeSet::new();
    for (i, p) in config.points.iter().enumerate() {
        let nbrs: Vec<usize> = index.k_nearest(&p.position, k, Some(i)).into_iter().map(|(j, _)| j).collect();
        for &j in &nbrs {
            edges.insert((i.min(j), i.max(j)));
        }
        out.push(nbrs);
    }
    Ok(KnnGraph { out, edges })
}

/// Nearest-neighbour distance of every point (infinite for a singleton).
pub fn nearest_distances(config: &PointConfiguration) -> Vec<f64> {
    if config.len() < 2 {
        return vec![f64::INFINITY; config.len()];
    }
    let index = index_for(config);
    config
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| index.nearest(&p.position, Some(i)).map_or(f64::INFINITY, |(_, d2)| d2.sqrt()))
        .collect()
}

/// Scores 1 iff the rescaled nearest-neighbour distance is strictly below t.
pub fn nn_indicator(config: &PointConfiguration, t: f64, lambda: f64) -> Result<ScoreVector> {
    if config.len() < 2 {
        return Err(GeoError::TooFewPoints { needed: 2, got: config.len() });
    }
    let s = lambda.powf(1.0 / config.dim() as f64);
    let scores = nearest_distances(config).into_iter().map(|r| f64::from(u8::from(r * s < t))).collect();
    Ok(ScoreVector { ids: config.ids(), scores, lambda })
}
