//! Simulation and estimation toolkit for stabilizing functionals of Poisson
//! point processes: random sequential packing, spatial birth-growth,
//! germ-grain volumes and nearest-neighbour scores, with Monte Carlo
//! estimators for variance functionals, add-one costs, cumulants,
//! log-Laplace transforms, quadratic rate functions, Gibbs tilting and the
//! couplings behind the iterated-logarithm results.

pub mod error;
pub mod estimate;
pub mod estimators;
pub mod experiments;
pub mod functionals;
pub mod gibbs;
pub mod measures;
pub mod geometry;
pub mod par;
pub mod processes;
pub mod rng;
pub mod stats;

pub use error::{GeoError, Result};
pub use estimate::Estimate;
pub use rng::SeedSpec;
