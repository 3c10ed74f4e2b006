//! `hyqt`: sweeps, verification runs and threshold searches for hybrid-qubit
//! teleportation, written as CSV.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use commands::{classify, Exit};
use config::{Command, ConfigFile, RunConfig, StrategyChoice};

/// Environment variable that fixes the worker thread count.
const THREADS_ENV: &str = "HYQT_THREADS";

#[derive(Parser)]
#[command(name = "hyqt", version, about = "Hybrid-qubit teleportation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check closed forms against the simulators; exit 1 on any failure.
    Verify(Flags),
    /// Primitive cost of one error-correction round against alpha.
    Resources(Flags),
    /// Loss threshold against alpha for each generation strategy.
    Threshold(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML file with any of the flag values; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha_min: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long)]
    alpha_steps: Option<usize>,
    #[arg(long)]
    eta_min: Option<f64>,
    #[arg(long)]
    eta_max: Option<f64>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyChoice>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    min_trials: Option<u64>,
    #[arg(long)]
    replicas: Option<u32>,
    #[arg(long)]
    levels: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn into_config(self, command: Command) -> anyhow::Result<RunConfig> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            alpha_min: self.alpha_min,
            alpha_max: self.alpha_max,
            alpha_steps: self.alpha_steps,
            eta_min: self.eta_min,
            eta_max: self.eta_max,
            strategy: self.strategy,
            trials: self.trials,
            min_trials: self.min_trials,
            replicas: self.replicas,
            levels: self.levels,
            seed: self.seed,
            out: self.out,
        };
        RunConfig::resolve(command, file.merge(flags))
    }
}

fn threads_from_env() -> anyhow::Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
    hybrid_teleport::par::set_threads(n)?;
    Ok(())
}

fn run(cli: Cli) -> Result<Exit, (Exit, anyhow::Error)> {
    let config_error = |e: anyhow::Error| (Exit::Config, e);
    threads_from_env().map_err(config_error)?;
    let (command, flags) = match cli.command {
        Cmd::Verify(f) => (Command::Verify, f),
        Cmd::Resources(f) => (Command::Resources, f),
        Cmd::Threshold(f) => (Command::Threshold, f),
    };
    let cfg = flags.into_config(command).map_err(config_error)?;
    let result = match command {
        Command::Verify => commands::verify(&cfg),
        Command::Resources => commands::resources(&cfg),
        Command::Threshold => commands::threshold(&cfg),
    };
    let (table, exit) = result.map_err(|e| (classify(&e), e))?;
    match &cfg.out {
        Some(path) => {
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display())).map_err(config_error)?;
            table.write(&cfg, std::io::BufWriter::new(file)).map_err(config_error)?;
        }
        None => {
            let stdout = std::io::stdout();
            table.write(&cfg, stdout.lock()).map_err(config_error)?;
        }
    }
    if command == Command::Verify {
        let failed = table.rows.iter().filter(|r| r.last().is_some_and(|s| s == "fail")).count();
        let _ = writeln!(std::io::stderr(), "verify: {} checks, {failed} failed", table.rows.len());
    }
    Ok(exit)
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(exit) => exit,
        Err((exit, e)) => {
            eprintln!("hyqt: {e:#}");
            exit
        }
    };
    ExitCode::from(code as u8)
}
