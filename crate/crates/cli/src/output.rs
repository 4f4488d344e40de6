use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use geoprob::experiments::ExperimentReport;

use crate::config::RunConfig;

pub fn resolve_dir(out: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    if let Some(p) = out {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output_dir {
        return PathBuf::from(p);
    }
    let root = std::env::var_os("GEOPROB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("geoprob-out"));
    root.join(cfg.experiment.name())
}

/// The config as run, with the resolved seed and the code version. Feeding
/// it back to `geoprob run` reproduces the report.
pub fn manifest(cfg: &RunConfig) -> RunConfig {
    let mut m = cfg.clone();
    m.code_version = Some(env!("CARGO_PKG_VERSION").to_string());
    m
}

pub fn write_all(dir: &Path, cfg: &RunConfig, report: &ExperimentReport) -> io::Result<()> {
    let cells = dir.join("cells");
    fs::create_dir_all(&cells)?;
    fs::write(dir.join("report.json"), report.to_json())?;
    for (name, table) in &report.tables {
        fs::write(cells.join(format!("{name}.csv")), table.to_csv())?;
    }
    let mut m = serde_json::to_string_pretty(&manifest(cfg)).map_err(io::Error::other)?;
    m.push('\n');
    fs::write(dir.join("manifest.json"), m)
}
