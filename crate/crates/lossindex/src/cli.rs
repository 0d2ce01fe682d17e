//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{execute, Command};
use crate::config::{self, Overrides};
use crate::error::CliError;
use crate::output;
use crate::validate;

#[derive(Debug, Parser)]
#[command(name = "lossindex", version, about = "Loss-index risk pipeline")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Log stage progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Sub {
    /// Deflate, impute and build the index: panel.csv, index.csv.
    Ingest,
    /// NIG fits per category and for the index: fits.json.
    FitNig,
    /// ARMA-GARCH fits used by the backtest: fits.json.
    FitGarch,
    /// VaR backtests per innovation and level: backtest.csv.
    Backtest,
    /// Call and put surfaces: surface.csv.
    Price,
    /// Implied-volatility surface: surface.csv.
    IvSurface,
    /// Tail and center risk budgets: budget.csv.
    Budget,
    /// CoVaR, CoES and CoETL per factor and level: stress.csv.
    Stress,
    /// All stages.
    Run,
    /// Check config, inputs and model conditions without writing.
    Validate,
}

impl Sub {
    fn command(self) -> Option<Command> {
        Some(match self {
            Sub::Ingest => Command::Ingest,
            Sub::FitNig => Command::FitNig,
            Sub::FitGarch => Command::FitGarch,
            Sub::Backtest => Command::Backtest,
            Sub::Price => Command::Price,
            Sub::IvSurface => Command::IvSurface,
            Sub::Budget => Command::Budget,
            Sub::Stress => Command::Stress,
            Sub::Run => Command::Run,
            Sub::Validate => return None,
        })
    }
}

/// Executes the parsed command line and returns the process exit status.
pub fn main_with(cli: Cli) -> i32 {
    let Some(path) = cli.config.clone() else {
        eprintln!("error: {}", CliError::config("no --config given"));
        return 1;
    };
    let overrides = Overrides { seed: cli.seed, out: cli.out.clone() };
    let Some(cmd) = cli.command.command() else {
        let diags = validate::validate(&path, &overrides);
        for d in &diags {
            println!("{d}");
        }
        let errors = diags.iter().filter(|d| d.severity == validate::Severity::Error).count();
        match (errors, diags.len()) {
            (0, 0) => println!("ok"),
            (0, w) => println!("ok with {w} warning(s)"),
            (e, n) => println!("{e} error(s), {} warning(s)", n - e),
        }
        return validate::exit_code(&diags);
    };
    let result = config::load(&path, &overrides).and_then(|cfg| {
        let artifacts = execute(cmd, &cfg)?;
        output::emit(&cfg.out_dir, cmd.name(), &cfg.hash, cfg.seed, &artifacts)
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
