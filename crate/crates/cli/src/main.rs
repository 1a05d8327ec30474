use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridswing_cli::commands::{self, CliError};
use gridswing_cli::output::{emit, input_hash};
use gridswing_cli::{Level, ScenarioFile, Solver};

/// Transient swing of a generator after a step in its grid coupling.
#[derive(Parser)]
#[command(name = "gridswing", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Scenario file of `key = value` lines.
    #[arg(long)]
    scenario: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Rotor angle and machine frequencies over time (CSV).
    Transient {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = Solver::Eigen)]
        solver: Solver,
    },
    /// Normalized rotor-angle spectrum on the scenario's frequency grid (CSV).
    Spectrum {
        #[command(flatten)]
        io: Io,
    },
    /// Characteristic frequencies and relaxation times (JSON).
    Characteristics {
        #[command(flatten)]
        io: Io,
    },
    /// Cross-solver and reduction checks (JSON); exit code 1 on failure.
    Verify {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
    },
    /// Characteristics for a list of values of one scenario key (CSV).
    Sweep {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Scenarios solved concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn load(io: &Io) -> Result<ScenarioFile, CliError> {
    let text = std::fs::read_to_string(&io.scenario)?;
    Ok(ScenarioFile::parse(&text)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (io, text) = match &cli.command {
        Command::Transient { io, solver } => {
            let sc = load(io)?;
            let hash = input_hash("transient", &[("solver", format!("{solver:?}"))], &sc.echo());
            (io, commands::transient(&sc, *solver, &hash)?)
        }
        Command::Spectrum { io } => {
            let sc = load(io)?;
            let hash = input_hash("spectrum", &[], &sc.echo());
            (io, commands::spectrum_csv(&sc, &hash)?)
        }
        Command::Characteristics { io } => {
            let sc = load(io)?;
            let hash = input_hash("characteristics", &[], &sc.echo());
            (io, commands::characteristics_json(&sc, &hash)?)
        }
        Command::Verify { io, level } => {
            let sc = load(io)?;
            let hash = input_hash("verify", &[("level", format!("{level:?}"))], &sc.echo());
            match commands::verify_json(&sc, *level, &hash) {
                Ok(text) => (io, text),
                Err(CliError::Verify { failed, total, report }) => {
                    emit(io.out.as_deref(), &report)?;
                    return Err(CliError::Verify { failed, total, report });
                }
                Err(e) => return Err(e),
            }
        }
        Command::Sweep { io, key, values, jobs } => {
            let sc = load(io)?;
            let hash = input_hash("sweep", &[("key", key.clone()), ("values", values.join(","))], &sc.echo());
            (io, commands::sweep_csv(&sc, key, values, *jobs, &hash)?)
        }
    };
    emit(io.out.as_deref(), &text)?;
    Ok(())
}

fn main() -> ExitCode {
    faer::set_global_parallelism(faer::Par::Seq);
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gridswing: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
