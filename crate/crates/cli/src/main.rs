use std::path::PathBuf;
use std::process::ExitCode;

use amestctl::checks::SuiteOptions;
use amestctl::{CliError, SEED_ENV};
use clap::{Parser, Subcommand};

/// Payload estimation and control experiments for a hexacopter with a 2-DOF arm.
#[derive(Parser)]
#[command(name = "amestctl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its log, summary and charts.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run several scenarios sharing truth and trajectory and tabulate them.
    Compare {
        #[arg(required = true, num_args = 2..)]
        configs: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the invariant suite on seeded random samples.
    Validate {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Print the default configuration.
    DefaultConfig,
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => amestctl::parse_seed(&v).map(Some),
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Simulate { config, out } => amestctl::simulate(&config, &out, env_seed()?),
        Command::Compare { configs, out } => amestctl::compare(&configs, &out, env_seed()?),
        Command::Validate {
            seed,
            samples,
            inject_fault,
        } => {
            let seed = match seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(0),
            };
            amestctl::validate(&SuiteOptions {
                seed,
                samples,
                inject_fault,
            })
        }
        Command::DefaultConfig => Ok(amestctl::config::DEFAULT_CONFIG.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("amestctl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
