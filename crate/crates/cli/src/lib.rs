//! Library side of `amestctl`: configuration, log serialization, charts,
//! reports and the invariant suite.

pub mod checks;
pub mod config;
pub mod csvlog;
pub mod report;
pub mod svg;

use std::path::{Path, PathBuf};

use amest::sim::{self, Scenario, SimLog};

pub use config::Config;

/// Environment variable overriding the configured noise seed.
pub const SEED_ENV: &str = "AMESTCTL_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("simulation diverged at t = {time} s: {reason}")]
    Diverged { time: f64, reason: String },
    #[error("simulation error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) | CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Diverged { .. } | CliError::Runtime(_) => 3,
        }
    }
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io(path, e))
}

/// Parses an `AMESTCTL_SEED` value.
pub fn parse_seed(value: &str) -> Result<u64, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {value:?}")))
}

/// Loads a config and applies the seed override.
pub fn load_scenario(path: &Path, seed: Option<u64>) -> Result<(Config, Scenario), CliError> {
    let mut cfg = Config::load(path)?;
    if let Some(seed) = seed {
        cfg.sim.seed = seed;
    }
    let scenario = cfg.to_scenario()?;
    Ok((cfg, scenario))
}

/// Writes `run.csv`, `summary.txt`, the charts and `config.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    cfg: &Config,
    scenario: &Scenario,
    log: &SimLog,
    diverged: Option<(f64, &str)>,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    write(&dir.join("run.csv"), &csvlog::to_csv(log))?;
    write(&dir.join("config.json"), &cfg.to_json())?;
    write(&dir.join("summary.txt"), &report::summary(scenario, log, diverged))?;
    write(&dir.join("tracking.svg"), &report::tracking_chart(log))?;
    write(&dir.join("params.svg"), &report::params_chart(scenario, log))?;
    Ok(())
}

/// `amestctl simulate`.
pub fn simulate(config: &Path, out: &Path, seed: Option<u64>) -> Result<String, CliError> {
    let (cfg, scenario) = load_scenario(config, seed)?;
    match sim::run(&scenario) {
        Ok(log) => {
            write_outputs(out, &cfg, &scenario, &log, None)?;
            Ok(report::summary(&scenario, &log, None))
        }
        Err(amest::Error::Diverged { time, reason, log }) => {
            write_outputs(out, &cfg, &scenario, &log, Some((time, &reason)))?;
            Err(CliError::Diverged { time, reason })
        }
        Err(e) => Err(CliError::Runtime(e.to_string())),
    }
}

fn scenario_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}

/// `amestctl compare`.
pub fn compare(configs: &[PathBuf], out: &Path, seed: Option<u64>) -> Result<String, CliError> {
    if configs.len() < 2 {
        return Err(CliError::Usage("compare needs at least two configs".into()));
    }
    let mut loaded = Vec::with_capacity(configs.len());
    for path in configs {
        loaded.push(load_scenario(path, seed)?);
    }
    let scenarios: Vec<Scenario> = loaded.iter().map(|(_, s)| s.clone()).collect();
    let comparison = match sim::compare(&scenarios) {
        Ok(c) => c,
        Err(amest::Error::ComparisonMismatch(m)) => return Err(CliError::Config(format!("incompatible scenarios: {m}"))),
        Err(amest::Error::Diverged { time, reason, .. }) => return Err(CliError::Diverged { time, reason }),
        Err(e) => return Err(CliError::Runtime(e.to_string())),
    };

    std::fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let labels: Vec<String> = configs.iter().map(|p| scenario_label(p)).collect();
    for (i, ((cfg, scenario), log)) in loaded.iter().zip(&comparison.logs).enumerate() {
        let dir = out.join(format!("{}-{}", i + 1, labels[i]));
        write_outputs(&dir, cfg, scenario, log, None)?;
    }
    let table = report::compare_table(&labels, &comparison.summaries);
    write(&out.join("compare.csv"), &table)?;
    write(
        &out.join("params.svg"),
        &report::compare_params_chart(&labels, &scenarios[0], &comparison.logs),
    )?;
    write(
        &out.join("tracking.svg"),
        &report::compare_tracking_chart(&labels, &comparison.logs),
    )?;
    Ok(table)
}

/// `amestctl validate`: returns the report, or a validation error carrying it.
pub fn validate(opts: &checks::SuiteOptions) -> Result<String, CliError> {
    let results = checks::run_suite(opts);
    let mut text = format!(
        "invariant suite: seed {}, {} random states{}\n",
        opts.seed,
        opts.samples,
        if opts.inject_fault { ", fault injected into C" } else { "" }
    );
    for r in &results {
        text.push_str(&format!("{r}\n"));
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        text.push_str("all properties hold\n");
        Ok(text)
    } else {
        Err(CliError::Validation(format!("{text}failed: {}", failed.join(", "))))
    }
}
