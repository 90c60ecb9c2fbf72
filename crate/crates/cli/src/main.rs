//! `heig`: bound functions, condition scans, eigenpairs and ρ-sweeps for
//! Hammerstein eigenvalue problems, driven by a TOML config.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 solver non-convergence.

mod commands;
mod config;
mod problem;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use heig_core::Sign;

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver did not converge: {reason} (diagnostics: {})", diagnostics.display())]
    NonConvergence {
        reason: String,
        diagnostics: PathBuf,
    },
}

#[derive(Parser)]
#[command(
    name = "heig",
    version,
    about = "Eigenvalue localization and eigenpairs for Hammerstein integral equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set rho=0.05` or `--set rho_grid.count=40`;
    /// an empty value (`--set rho=`) removes the key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (defaults to `outputs` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate F_low and F_up on [0,1] for one rho.
    Bounds(Common),
    /// Scan the sign conditions and a(rho) over a rho grid and locate thresholds.
    Scan(Common),
    /// Solve for eigenpairs with sup-norm rho.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SignArg::Both)]
        sign: SignArg,
    },
    /// Localization band and both eigenvalue branches over a rho grid.
    Sweep(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
    Both,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HEIG_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "HEIG_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot configure {n} threads: {e}")))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    let common = match &cli.command {
        Command::Bounds(c) | Command::Scan(c) | Command::Sweep(c) => c,
        Command::Solve { common, .. } => common,
    };
    let cfg = RunConfig::load(&common.config, &common.overrides)?;
    let problem = problem::build(&cfg.problem)?;
    let out = common.out.as_deref();
    match &cli.command {
        Command::Bounds(_) => commands::bounds(&cfg, &problem, out),
        Command::Scan(_) => commands::scan(&cfg, &problem, out),
        Command::Sweep(_) => commands::sweep(&cfg, &problem, out),
        Command::Solve { sign, .. } => {
            let signs: &[Sign] = match sign {
                SignArg::Plus => &[Sign::Plus],
                SignArg::Minus => &[Sign::Minus],
                SignArg::Both => &[Sign::Plus, Sign::Minus],
            };
            commands::solve(&cfg, &problem, signs, out)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<CliError>() {
        return match e {
            CliError::Config(_) => 2,
            CliError::NonConvergence { .. } => 4,
        };
    }
    match err.downcast_ref::<heig_core::Error>() {
        Some(heig_core::Error::NoConvergence(_)) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
