//! game-lab: equilibria, trajectories, weight sweeps, energy grids, and
//! basin maps for the games in `game_lab_core`, driven by JSON scenario
//! files. One invocation writes one artifact.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::CommandOutput;
use crate::config::Scenario;

/// Errors carry their process exit code: output I/O exits 1, configuration
/// problems exit 2, numeric failures exit 3.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Config(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<game_lab_core::Error> for CliError {
    fn from(e: game_lab_core::Error) -> Self {
        use game_lab_core::Error as E;
        // A scenario that asks for something outside the contract is a
        // configuration problem; failures while computing are numeric.
        match &e {
            E::Domain(_) | E::Precondition(_) | E::Unsupported(_) => {
                CliError::Config(e.to_string())
            }
            E::NoSolution(_) | E::Convergence(_) | E::Numeric(_) => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(
    name = "game-lab",
    version,
    about = "Iterated medium-access games: equilibria, dynamics, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate and classify equilibria; writes a JSON report.
    Nep(CommonArgs),
    /// Integrate a response flow from a start point; writes the trajectory.
    Simulate(CommonArgs),
    /// Classify equilibria across altruism weights and bracket stability
    /// switches.
    SweepAlpha(CommonArgs),
    /// Tabulate an energy function over a grid.
    Contour(CommonArgs),
    /// Label grid starts by the attractor their trajectory reaches.
    Basin(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output artifact path.
    #[arg(long)]
    out: PathBuf,
    /// Output encoding; defaults to json for `nep` and csv otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Honor `GAME_LAB_THREADS` before any parallel work starts.
fn init_threads() -> Result<(), CliError> {
    let Some(raw) = std::env::var_os("GAME_LAB_THREADS") else {
        return Ok(());
    };
    let text = raw.to_string_lossy();
    let n: usize = text.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        CliError::Config(format!("GAME_LAB_THREADS must be a positive integer, got {text:?}"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

type Runner = fn(&Scenario, Format) -> Result<CommandOutput, CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let (args, default_format, runner): (&CommonArgs, Format, Runner) = match &cli.command {
        Command::Nep(a) => (a, Format::Json, commands::cmd_nep),
        Command::Simulate(a) => (a, Format::Csv, commands::cmd_simulate),
        Command::SweepAlpha(a) => (a, Format::Csv, commands::cmd_sweep_alpha),
        Command::Contour(a) => (a, Format::Csv, commands::cmd_contour),
        Command::Basin(a) => (a, Format::Csv, commands::cmd_basin),
    };
    let format = args.format.unwrap_or(default_format);
    let scenario = Scenario::load(&args.config)?;
    let outcome = runner(&scenario, format)?;
    std::fs::write(&args.out, outcome.file.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", args.out.display())))?;
    if !outcome.stdout.is_empty() {
        print!("{}", outcome.stdout);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
