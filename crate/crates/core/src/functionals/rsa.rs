//! Random sequential packing of equal balls.

use crate::error::Result;
use crate::geometry::InsertGrid;
use crate::processes::PointConfiguration;

/// Point indices sorted by arrival time, ties broken by id.
pub fn arrival_order(config: &PointConfiguration) -> Result<Vec<usize>> {
    let times: Vec<f64> = config.points.iter().map(|p| p.time()).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..config.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(config.points[a].id.cmp(&config.points[b].id)));
    Ok(order)
}

/// Acceptance flags: a ball is accepted iff it strictly overlaps no
/// previously accepted ball. Cell-list accelerated.
pub fn rsa_pack(config: &PointConfiguration, r: f64) -> Result<Vec<bool>> {
    let order = arrival_order(config)?;
    let n = config.len();
    let mut accepted = vec![false; n];
    let reach = 2.0 * r;
    let reach2 = reach * reach;
    let w = &config.window;
    let mut grid = InsertGrid::new(w, reach, n);
    for &i in &order {
        let x = &config.points[i].position;
        let mut blocked = false;
        grid.for_each_near(x, |j| {
            if !blocked && w.dist2(x, &config.points[j].position) < reach2 {
                blocked = true;
            }
        });
        if !blocked {
            accepted[i] = true;
            grid.insert(i, x);
        }
    }
    Ok(accepted)
}

/// Quadratic reference implementation of [`rsa_pack`].
pub fn rsa_pack_naive(config: &PointConfiguration, r: f64) -> Result<Vec<bool>> {
    let order = arrival_order(config)?;
    let reach2 = 4.0 * r * r;
    let w = &config.window;
    let mut accepted = vec![false; config.len()];
    let mut packed: Vec<usize> = Vec::new();
    for &i in &order {
        let x = &config.points[i].position;
        if packed.iter().all(|&j| w.dist2(x, &config.points[j].position) >= reach2) {
            accepted[i] = true;
            packed.push(i);
        }
    }
    Ok(accepted)
}
