//! Command-line runner: reads a JSON config, runs one experiment and writes
//! report.json, cells/*.csv and manifest.json.

pub mod config;
pub mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use config::{validate_config, RunConfig};

pub use config::{Violation, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "geoprob", version, about = "Desk-scale experiments for stabilizing functionals of Poisson processes")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config and print it with defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run whatever experiment the config names (also replays a manifest).
    Run(RunArgs),
    /// Tabulate V(τ).
    EstimateV(RunArgs),
    /// Tabulate δ(τ).
    EstimateDelta(RunArgs),
    /// Cumulant scaling of the pairings across a λ grid.
    Cumulants(RunArgs),
    /// Moderate-deviation tail rates against K(t).
    Mdp(RunArgs),
    /// Nested-coupling trajectories against the LIL envelope.
    Lil(RunArgs),
    /// Covariance between separated boxes.
    Mixing(RunArgs),
    /// Poisson against binomial samples under the nested coupling.
    Depoissonize(RunArgs),
    /// Exactness checks for the tilted Gibbs sampler.
    GibbsCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's output_dir, then
    /// $GEOPROB_OUT/<experiment>, then ./geoprob-out/<experiment>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides master_seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads. Outputs do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Skip the per-verdict summary on stdout.
    #[arg(long)]
    quiet: bool,
}

/// Runs the command line `args` (program name first) and returns the exit
/// status: 0 when every verdict passes, 2 when one fails, 1 on errors.
pub fn run_cli<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (args, verb) = match cli.command {
        Command::Validate { config } => return validate(&config),
        Command::Run(a) => (a, None),
        Command::EstimateV(a) => (a, Some("v_table")),
        Command::EstimateDelta(a) => (a, Some("delta_table")),
        Command::Cumulants(a) => (a, Some("cumulants")),
        Command::Mdp(a) => (a, Some("mdp")),
        Command::Lil(a) => (a, Some("lil")),
        Command::Mixing(a) => (a, Some("mixing")),
        Command::Depoissonize(a) => (a, Some("depoissonize")),
        Command::GibbsCheck(a) => (a, Some("gibbs_check")),
    };
    match run(&args, verb) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn validate(path: &PathBuf) -> ExitCode {
    let raw = match read(path) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match validate_config(&raw) {
        Ok(cfg) => {
            println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
            ExitCode::SUCCESS
        }
        Err(violations) => {
            for v in violations {
                eprintln!("{v}");
            }
            ExitCode::from(1)
        }
    }
}

/// Fills in the experiment name from the verb, or checks that they agree.
fn apply_verb(raw: &str, verb: Option<&str>) -> Result<String, String> {
    let Some(verb) = verb else { return Ok(raw.to_string()) };
    let mut doc: Value = serde_json::from_str(raw).map_err(|e| format!("not valid JSON: {e}"))?;
    let map = doc.as_object_mut().ok_or("config must be a JSON object")?;
    match map.get("experiment").and_then(Value::as_str) {
        None => {
            map.insert("experiment".into(), Value::from(verb));
        }
        Some(name) if name != verb => {
            return Err(format!("config describes experiment {name:?} but the verb runs {verb:?}"));
        }
        Some(_) => {}
    }
    Ok(doc.to_string())
}

fn run(args: &RunArgs, verb: Option<&str>) -> Result<ExitCode, String> {
    let raw = apply_verb(&read(&args.config)?, verb)?;
    let mut cfg: RunConfig = validate_config(&raw).map_err(|vs| {
        vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n")
    })?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err("--jobs must be at least 1".into());
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| e.to_string())?;
    let dir = output::resolve_dir(args.out.as_deref(), &cfg);
    let report = pool
        .install(|| geoprob::experiments::run_experiment(&cfg.experiment, cfg.master_seed))
        .map_err(|e| e.to_string())?;
    output::write_all(&dir, &cfg, &report).map_err(|e| format!("cannot write to {}: {e}", dir.display()))?;
    if !args.quiet {
        for v in &report.verdicts {
            println!("{} {}: observed {} ({} = {})", if v.passed { "PASS" } else { "FAIL" }, v.name, v.observed, v.tolerance_key, v.tolerance);
        }
    }
    let failures = report.failures();
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for v in failures {
            eprintln!("failed: {} (observed {}, {} = {}) {}", v.name, v.observed, v.tolerance_key, v.tolerance, v.detail);
        }
        Ok(ExitCode::from(2))
    }
}
