//! Monte Carlo estimators for the variance and add-one functionals, their
//! quadratures, sample cumulants, log-Laplace transforms and rate functions.

pub mod cumulants;
pub mod log_laplace;
pub mod quadrature;
pub mod rates;
pub mod sigma;
pub mod stationary;
pub mod tables;

pub use cumulants::{empirical_cumulants, CumulantSet};
pub use log_laplace::empirical_log_laplace;
pub use quadrature::{integrate, Quadrature};
pub use rates::{covariance_matrix, rate_from_covariance, rate_measure, rate_multivariate, rate_scalar, MeasureInput};
pub use sigma::{estimate_gamma, estimate_sigma2_binomial, estimate_sigma_limit};
pub use stationary::{
    closed_form_v, estimate_delta, estimate_v, estimate_v_direct, nn_threshold_delta, StationaryConfig, VRoute,
};
pub use tables::{DeltaRoute, DeltaTable, TauTable, VTable};
