//! Causal clusters of a packing configuration.
//!
//! Whether x is packed depends only on chains of strictly overlapping balls
//! with decreasing arrival times leading back from x. The cluster also
//! follows the forward chains leaving x, since those are the points x can
//! affect.

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::geometry::{CellIndex, PointId};
use crate::processes::PointConfiguration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalCluster {
    pub ids: Vec<PointId>,
    pub diameter: f64,
}

pub fn causal_cluster(id: PointId, config: &PointConfiguration, r: f64) -> Result<CausalCluster> {
    let start = config.index_of(id).ok_or_else(|| GeoError::InconsistentInput(format!("no point with id {id}")))?;
    let keys: Vec<(f64, PointId)> = config.points.iter().map(|p| Ok((p.time()?, p.id))).collect::<Result<_>>()?;
    let earlier = |a: usize, b: usize| keys[a].0.total_cmp(&keys[b].0).then(keys[a].1.cmp(&keys[b].1)).is_lt();
    let index = CellIndex::new(&config.window, &config.positions(), &config.ids(), 2.0 * r);
    let reach2 = 4.0 * r * r;
    let mut member = vec![false; config.len()];
    member[start] = true;
    for backward in [true, false] {
        let mut stack = vec![start];
        let mut seen = vec![false; config.len()];
        seen[start] = true;
        while let Some(z) = stack.pop() {
            index.for_each_within(&config.points[z].position, 2.0 * r, |j, d2| {
                if seen[j] || d2 >= reach2 {
                    return;
                }
                let ok = if backward { earlier(j, z) } else { earlier(z, j) };
                if ok {
                    seen[j] = true;
                    member[j] = true;
                    stack.push(j);
                }
            });
        }
    }
    let members: Vec<usize> = (0..config.len()).filter(|&k| member[k]).collect();
    let mut diameter: f64 = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            diameter = diameter.max(config.window.dist(&config.points[i].position, &config.points[j].position));
        }
    }
    let mut ids: Vec<PointId> = members.iter().map(|&k| config.points[k].id).collect();
    ids.sort_unstable();
    Ok(CausalCluster { ids, diameter })
}
