//! Desk-scale drivers for the limit theorems. Each driver takes a typed
//! config and a master seed and returns an [`ExperimentReport`]; every
//! verdict in it is judged against a tolerance named in the config.

mod common;
mod cumulants;
mod depoissonize;
mod gibbs_check;
mod lil;
mod log_laplace;
mod mdp;
mod mixing;
mod report;
mod tables;

use serde::{Deserialize, Serialize};

pub use common::{calibration_mean, Model, TableSource};
pub use cumulants::{cumulant_scaling, CumulantConfig, CumulantTolerances};
pub use depoissonize::{depoissonization, DepoissonizeConfig, DepoissonizeTolerances};
pub use gibbs_check::{gibbs_check, GibbsCheckConfig, GibbsTolerances};
pub use lil::{lil_trajectory, LilConfig, LilTolerances};
pub use log_laplace::{log_laplace_convergence, LogLaplaceConfig, LogLaplaceTolerances};
pub use mdp::{mdp_tail, MdpConfig, MdpTolerances, TailCell};
pub use mixing::{mixing_decay, MixingConfig, MixingTolerances};
pub use report::{ExperimentReport, Table, Verdict};
pub use tables::{delta_table, v_table, DeltaTableConfig, DirectCheck, VTableConfig};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    LogLaplace(LogLaplaceConfig),
    Cumulants(CumulantConfig),
    Mdp(MdpConfig),
    Lil(LilConfig),
    Mixing(MixingConfig),
    Depoissonize(DepoissonizeConfig),
    VTable(VTableConfig),
    DeltaTable(DeltaTableConfig),
    GibbsCheck(GibbsCheckConfig),
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::LogLaplace(_) => "log_laplace",
            ExperimentConfig::Cumulants(_) => "cumulants",
            ExperimentConfig::Mdp(_) => "mdp",
            ExperimentConfig::Lil(_) => "lil",
            ExperimentConfig::Mixing(_) => "mixing",
            ExperimentConfig::Depoissonize(_) => "depoissonize",
            ExperimentConfig::VTable(_) => "v_table",
            ExperimentConfig::DeltaTable(_) => "delta_table",
            ExperimentConfig::GibbsCheck(_) => "gibbs_check",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentConfig::LogLaplace(c) => c.validate(),
            ExperimentConfig::Cumulants(c) => c.validate(),
            ExperimentConfig::Mdp(c) => c.validate(),
            ExperimentConfig::Lil(c) => c.validate(),
            ExperimentConfig::Mixing(c) => c.validate(),
            ExperimentConfig::Depoissonize(c) => c.validate(),
            ExperimentConfig::VTable(c) => c.validate(),
            ExperimentConfig::DeltaTable(c) => c.validate(),
            ExperimentConfig::GibbsCheck(c) => c.validate(),
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, master_seed: u64) -> Result<ExperimentReport> {
    match cfg {
        ExperimentConfig::LogLaplace(c) => log_laplace_convergence(c, master_seed),
        ExperimentConfig::Cumulants(c) => cumulant_scaling(c, master_seed),
        ExperimentConfig::Mdp(c) => mdp_tail(c, master_seed),
        ExperimentConfig::Lil(c) => lil_trajectory(c, master_seed),
        ExperimentConfig::Mixing(c) => mixing_decay(c, master_seed),
        ExperimentConfig::Depoissonize(c) => depoissonization(c, master_seed),
        ExperimentConfig::VTable(c) => v_table(c, master_seed),
        ExperimentConfig::DeltaTable(c) => delta_table(c, master_seed),
        ExperimentConfig::GibbsCheck(c) => gibbs_check(c, master_seed),
    }
}
