//! Tensor-product midpoint quadrature on the unit cube.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Position;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub nodes_per_axis: usize,
    /// Double the node count until the relative change drops below `rel_tol`.
    pub refine: bool,
    pub rel_tol: f64,
    /// Upper limit on the total number of nodes.
    pub max_total_nodes: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { nodes_per_axis: 64, refine: true, rel_tol: 1e-4, max_total_nodes: 1 << 21 }
    }
}

impl Quadrature {
    pub fn fixed(nodes_per_axis: usize) -> Self {
        Self { nodes_per_axis, refine: false, ..Self::default() }
    }
}

/// Midpoint rule with n nodes per axis.
pub fn midpoint<F: FnMut(&Position) -> Result<f64>>(mut f: F, d: usize, n: usize) -> Result<f64> {
    let total = n.pow(d as u32);
    let h = 1.0 / n as f64;
    let mut sum = 0.0;
    for flat in 0..total {
        let mut x = [0.0; 3];
        let mut rem = flat;
        for xi in x.iter_mut().take(d) {
            *xi = ((rem % n) as f64 + 0.5) * h;
            rem /= n;
        }
        sum += f(&x)?;
    }
    Ok(sum / total as f64)
}

/// ∫_{[0,1]^d} f under the given rule. With refinement on, the returned
/// value is the Richardson combination of the last two midpoint sums.
pub fn integrate<F: FnMut(&Position) -> Result<f64>>(mut f: F, d: usize, rule: &Quadrature) -> Result<f64> {
    let mut n = rule.nodes_per_axis.max(1);
    let mut value = midpoint(&mut f, d, n)?;
    if !rule.refine {
        return Ok(value);
    }
    let mut extrapolated = value;
    while (2 * n).pow(d as u32) <= rule.max_total_nodes {
        n *= 2;
        let next = midpoint(&mut f, d, n)?;
        let change = (next - value).abs();
        extrapolated = next + (next - value) / 3.0;
        value = next;
        if change <= rule.rel_tol * value.abs().max(1e-300) {
            break;
        }
    }
    Ok(extrapolated)
}
