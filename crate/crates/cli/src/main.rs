//! `luckskill` command-line interface.

mod batch;
mod commands;
mod error;
mod inputs;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use error::CliResult;
use output::{FileDigest, Format, Output};

#[derive(Debug, Parser)]
#[command(name = "luckskill", version, about = "Luck versus skill in round-robin leagues")]
pub struct Cli {
    /// Master seed; commands derive every random stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 or absent: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Format echoed to stdout; files are always written as both.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a league from a JSON configuration.
    Simulate(commands::SimulateArgs),
    /// φ, Monte-Carlo interval and classification per season.
    Phi(commands::PhiArgs),
    /// Remove teams until each skill season looks random.
    Reduce(commands::PhiArgs),
    /// Roster-network features for one season.
    Features(commands::FeaturesArgs),
    /// Fit the Bradley-Terry–Poisson model.
    Fit(commands::FitArgs),
    /// Compare fits by DIC.
    Dic(commands::DicArgs),
    /// Underdog win probabilities from a fit.
    Underdog(commands::UnderdogArgs),
    /// φ and team removal over a directory of leagues.
    Batch(batch::BatchArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Phi(_) => "phi",
            Command::Reduce(_) => "reduce",
            Command::Features(_) => "features",
            Command::Fit(_) => "fit",
            Command::Dic(_) => "dic",
            Command::Underdog(_) => "underdog",
            Command::Batch(_) => "batch",
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    argv: Vec<String>,
    seed: u64,
    threads: Option<usize>,
    parallel: bool,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
}

fn run(cli: &Cli) -> CliResult<Output> {
    luckskill::exec::configure_threads(cli.threads);
    let parallel = luckskill::Execution::Parallel.is_parallel();
    let mut out = Output::new(&cli.out_dir, cli.format)?;
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a, cli.seed, &mut out)?,
        Command::Phi(a) => commands::phi(a, seed, &mut out)?,
        Command::Reduce(a) => commands::reduce(a, seed, &mut out)?,
        Command::Features(a) => commands::features(a, &mut out)?,
        Command::Fit(a) => commands::fit(a, seed, &mut out)?,
        Command::Dic(a) => commands::dic(a, &mut out)?,
        Command::Underdog(a) => commands::underdog(a, &mut out)?,
        Command::Batch(a) => batch::run(a, seed, &mut out)?,
    }
    let manifest = Manifest {
        tool: "luckskill",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        argv: std::env::args().collect(),
        seed,
        threads: cli.threads,
        parallel,
        inputs: &out.inputs,
        outputs: &out.outputs,
    };
    let bytes = serde_json::to_vec_pretty(&manifest).map_err(error::CliError::failed)?;
    std::fs::write(out.dir.join("manifest.json"), bytes).map_err(error::CliError::failed)?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if let Some(payload) = out.stdout_payload() {
                let mut stdout = std::io::stdout().lock();
                let _ = stdout.write_all(payload);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
