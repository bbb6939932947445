//! `rdcdyn` command line: simulate RDCs, build dynamic profiles, solve for
//! discrete states and sweep arc scenarios.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 infeasible
//! model, 4 no optimizer convergence, 5 I/O or network failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Lib(#[from] rdcdyn::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use rdcdyn::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(e) => match e {
                E::Infeasible { .. } => 3,
                E::NoConvergence { .. } => 4,
                E::Io(_) | E::Csv(_) | E::Json(_) | E::NotFound(_) | E::Network(_) | E::Offline(_) => 5,
                _ => 2,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rdcdyn", version, about = "Discrete-state dynamics from residual dipolar couplings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fail instead of downloading structures that are not cached.
    #[arg(long, global = true)]
    no_network: bool,
    /// Escalate the state count until the noise level is met.
    #[arg(long, global = true)]
    parsimonious: bool,
    #[arg(long, global = true)]
    max_states: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate RDCs for the configured model and write a truth manifest.
    Simulate,
    /// Forward and backward dynamic profiles with onset verdicts.
    Profile,
    /// Recover state rotations and occupancies, then assemble the ensemble.
    Solve,
    /// Run a matrix of arc scenarios and write one CSV row per cell.
    Sweep,
    /// Print the resolved configuration.
    Config,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.no_network {
        cfg.allow_network = false;
    }
    if cli.parsimonious {
        cfg.solver.parsimonious = true;
    }
    if let Some(n) = cli.max_states {
        cfg.solver.max_states = n;
    }
    if let Some(out) = &cli.out {
        cfg.out = std::path::absolute(out).map_err(|e| CliError::Config(format!("--out: {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Profile => commands::cmd_profile(&cfg),
        Command::Solve => commands::cmd_solve(&cfg),
        Command::Sweep => commands::cmd_sweep(&cfg),
        Command::Config => {
            print!("{}", cfg.to_toml()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rdcdyn::Error as E;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Lib(E::Infeasible { media: 2, states: 3 }).exit_code(), 3);
        assert_eq!(CliError::Lib(E::NoConvergence { tried: 64, best_objective: 1.0 }).exit_code(), 4);
        assert_eq!(CliError::Lib(E::Offline("1A1Z".into())).exit_code(), 5);
        assert_eq!(CliError::Lib(E::Io(std::io::Error::other("x"))).exit_code(), 5);
        assert_eq!(CliError::Lib(E::Validation("x".into())).exit_code(), 2);
    }
}
