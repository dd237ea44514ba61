//! Command-line front end: config-driven sweeps emitting CSV or JSON.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod table;

use std::ffi::OsString;
use std::io::Write;

use ambc_core::validate::ValidationOptions;
use clap::{Parser, Subcommand};

use crate::commands::CliError;
use crate::config::{ConfigError, ExperimentConfig};
use crate::table::Table;

#[derive(Debug, Parser)]
#[command(name = "ambc", version, about = "Multi-antenna ambient backscatter receiver experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<String>,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Overrides the trial count of every scenario (Monte-Carlo draws per set for `validate`).
    #[arg(long, global = true, value_name = "N")]
    pub trials: Option<u64>,
    /// Write results here instead of the config `output` (or stdout).
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<String>,
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// BER against SNR for every scenario block.
    BerSweep,
    /// Energy-detector ROC over the pf (and n_r) axes.
    Roc,
    /// Backscatter non-centrality over a grid of BD positions.
    ThetaMap,
    /// Beamformer estimators over preamble lengths.
    EstimationBench,
    /// Invariant and oracle self-checks.
    Validate,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| ConfigError::Invalid("--config PATH is required for this command".into()))?;
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.trials {
        for ns in &mut cfg.scenarios {
            ns.scenario.trials = n;
        }
    }
    Ok(cfg)
}

fn emit(table: &Table, cli: &Cli, cfg_output: Option<&str>) -> Result<(), CliError> {
    let text = if cli.json { table.to_json() } else { table.to_csv() };
    match cli.output.as_deref().or(cfg_output) {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            CliError::Config(ConfigError::Io {
                path: path.to_string(),
                msg: e.to_string(),
            })
        }),
        None => {
            // A closed pipe is not worth a panic.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.command == Command::Validate {
        let cfg = match cli.config {
            Some(_) => Some(load(cli)?),
            None => None,
        };
        let opts = ValidationOptions {
            seed: cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(1),
            mc_draws: cli.trials.map_or(ValidationOptions::default().mc_draws, |n| n as usize),
            kappa_perturbation: None,
        };
        let (table, passed) = commands::validate(&opts)?;
        emit(&table, cli, cfg.as_ref().and_then(|c| c.output.as_deref()))?;
        return if passed {
            Ok(())
        } else {
            Err(CliError::Validation("one or more checks failed".into()))
        };
    }
    let cfg = load(cli)?;
    let table = match cli.command {
        Command::BerSweep => commands::ber_sweep(&cfg)?,
        Command::Roc => commands::roc(&cfg)?,
        Command::ThetaMap => commands::theta_map(&cfg)?,
        Command::EstimationBench => commands::estimation_bench(&cfg)?,
        Command::Validate => unreachable!("handled above"),
    };
    emit(&table, cli, cfg.output.as_deref())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ambc: {e}");
            e.exit_code()
        }
    }
}
