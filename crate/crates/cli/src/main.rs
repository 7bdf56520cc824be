//! `meanfield`: run maximum-distribution experiments, export limit laws and
//! run the convergence checks.

mod config;
mod error;
mod law;
mod run;
mod svg;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, Profile, RunConfig};
use error::CliError;

const SEED_VAR: &str = "MEANFIELD_SEED";
const DEFAULT_VERIFY_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "meanfield", version, about = "Maxima of mean-field particle systems")]
struct Cli {
    /// Worker threads; defaults to the hardware parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the profile and the step in the file.
        #[arg(long, value_enum)]
        profile: Option<Profile>,
        /// Overrides the output directory in the file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the limit-law path as CSV.
    Law(law::LawArgs),
    /// Run one of the convergence checks.
    Verify {
        #[arg(value_enum)]
        suite: verify::Suite,
        #[arg(long, value_enum, default_value = "fast")]
        profile: Profile,
    },
}

fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{SEED_VAR} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if cli.jobs == Some(0) {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let seed = seed_override()?;
    match cli.command {
        Command::Run { config, profile, out } => {
            let overrides = Overrides {
                profile,
                output: out,
                base_seed: seed,
                jobs: cli.jobs,
            };
            let config = RunConfig::load(&config, &overrides)?;
            let outcome = run::cmd_run(&config)?;
            run::print_summary(&config, &outcome);
            Ok(())
        }
        Command::Law(args) => law::cmd_law(&args),
        Command::Verify { suite, profile } => verify::cmd_verify(
            suite,
            &verify::VerifyOptions {
                profile,
                base_seed: seed.unwrap_or(DEFAULT_VERIFY_SEED),
                jobs: cli.jobs,
            },
        ),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("meanfield: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
