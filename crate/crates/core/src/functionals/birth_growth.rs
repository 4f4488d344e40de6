//! Spatial birth-growth acceptance.
//!
//! Accepted cells are modelled as balls of radius
//! `min(ρ_j + v_j (t - T_j), R_cut)`; exact stopped shapes are not needed
//! for the acceptance indicator.

use serde::{Deserialize, Serialize};

use super::rsa::arrival_order;
use crate::error::{GeoError, Result};
use crate::geometry::InsertGrid;
use crate::processes::PointConfiguration;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthGrowthParams {
    pub radius_cap: f64,
    pub rho_min: f64,
}

/// Seed i is discarded iff its initial ball overlaps (strictly) a cell
/// grown by an accepted seed before time T_i.
pub fn birth_growth_accept(config: &PointConfiguration, params: &BirthGrowthParams) -> Result<Vec<bool>> {
    let order = arrival_order(config)?;
    let n = config.len();
    let mut rho = Vec::with_capacity(n);
    let mut speed = Vec::with_capacity(n);
    for p in &config.points {
        let r = p.radius()?;
        if r < params.rho_min || r > params.radius_cap {
            return Err(GeoError::InvalidParameter(format!(
                "seed {} radius {r} outside [{}, {}]",
                p.id, params.rho_min, params.radius_cap
            )));
        }
        rho.push(r);
        speed.push(p.speed()?);
    }
    let w = &config.window;
    let reach = 2.0 * params.radius_cap;
    let mut grid = InsertGrid::new(w, reach, n);
    let mut accepted = vec![false; n];
    for &i in &order {
        let p = &config.points[i];
        let ti = p.time.unwrap_or(0.0);
        let mut blocked = false;
        grid.for_each_near(&p.position, |j| {
            if blocked {
                return;
            }
            let q = &config.points[j];
            let grown = (rho[j] + speed[j] * (ti - q.time.unwrap_or(0.0))).min(params.radius_cap);
            let reach = rho[i] + grown;
            if w.dist2(&p.position, &q.position) < reach * reach {
                blocked = true;
            }
        });
        if !blocked {
            accepted[i] = true;
            grid.insert(i, &p.position);
        }
    }
    Ok(accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Window;
    use crate::processes::MarkedPoint;

    fn seed(id: u64, x: f64, t: f64) -> MarkedPoint {
        MarkedPoint::new(id, [x, 0.5, 0.0]).with_time(t).with_radius(0.1).with_speed(1.0)
    }

    const P: BirthGrowthParams = BirthGrowthParams { radius_cap: 0.3, rho_min: 0.05 };

    #[test]
    fn single_seed_is_accepted() {
        let c = PointConfiguration::new(Window::unit(2), vec![seed(0, 0.5, 0.4)]).unwrap();
        assert_eq!(birth_growth_accept(&c, &P).unwrap(), vec![true]);
    }

    #[test]
    fn distant_seed_is_accepted() {
        let c = PointConfiguration::new(Window::unit(2), vec![seed(0, 0.1, 0.0), seed(1, 0.1 + 0.41, 0.9)]).unwrap();
        assert_eq!(birth_growth_accept(&c, &P).unwrap(), vec![true, true]);
    }

    #[test]
    fn hand_built_pair_is_rejected() {
        // cell radius at T₂ = min(0.1 + 0.05, 0.3) = 0.15; 0.15 + 0.1 > 0.22
        let c = PointConfiguration::new(Window::unit(2), vec![seed(0, 0.3, 0.0), seed(1, 0.52, 0.05)]).unwrap();
        assert_eq!(birth_growth_accept(&c, &P).unwrap(), vec![true, false]);
        // a little later in time, the same distance is fine only if the cell had not grown: check growth matters
        let c = PointConfiguration::new(Window::unit(2), vec![seed(0, 0.3, 0.0), seed(1, 0.52, 0.0)]).unwrap();
        assert_eq!(birth_growth_accept(&c, &P).unwrap(), vec![true, true]);
    }

    #[test]
    fn growth_is_capped() {
        // at t = 0.9 the first cell would have radius 1.0 but is capped at 0.3
        let c = PointConfiguration::new(Window::unit(2), vec![seed(0, 0.2, 0.0), seed(1, 0.61, 0.9)]).unwrap();
        assert_eq!(birth_growth_accept(&c, &P).unwrap(), vec![true, true]);
    }

    #[test]
    fn radius_out_of_range_is_an_error() {
        let bad = MarkedPoint::new(0, [0.5; 3]).with_time(0.1).with_radius(0.01).with_speed(1.0);
        let c = PointConfiguration::new(Window::unit(2), vec![bad]).unwrap();
        assert!(birth_growth_accept(&c, &P).is_err());
    }
}
