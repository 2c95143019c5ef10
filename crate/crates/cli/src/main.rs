use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use cylwalk_cli::{commands, Globals, Outcome, RunConfig};

#[derive(Parser)]
#[command(name = "cylwalk", version, about = "Exact and Monte Carlo checks for random walks on a cylinder-set measure")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV output; overrides the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Decimal digits in human-readable output.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact probability of an event expression.
    Measure {
        expression: String,
        /// Also print a decomposition into disjoint planes.
        #[arg(long)]
        disjoint_planes: bool,
    },
    /// Sample trajectories and write trajectory and moment CSVs.
    Simulate,
    /// Constant velocity and the trace bound under a zero-force table.
    VerifyNewton1,
    /// Force/acceleration proportionality under a force schedule.
    VerifyNewton2,
    /// Trace convergence over a list of step counts at fixed total time.
    Converge {
        /// Comma-separated step counts; overrides the config.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
}

fn run(cli: Cli) -> Result<Outcome> {
    let config = cli.config.as_deref().map(RunConfig::load).transpose()?;
    let globals = Globals { seed: cli.seed, out_dir: cli.out_dir.clone(), precision: cli.precision };
    let require = || config.as_ref().context("this command needs --config");
    let outcome = match &cli.command {
        Command::Measure { expression, disjoint_planes } => {
            commands::measure(config.as_ref(), expression, *disjoint_planes, &globals)?
        }
        Command::Simulate => commands::simulate(require()?, &globals)?,
        Command::VerifyNewton1 => commands::verify_newton1(require()?, &globals)?,
        Command::VerifyNewton2 => commands::verify_newton2(require()?, &globals)?,
        Command::Converge { n_list } => commands::converge(require()?, n_list.as_deref(), &globals)?,
    };
    if !outcome.files.is_empty() {
        let dir = cli
            .out_dir
            .or_else(|| config.as_ref().and_then(|c| c.output_dir.clone()))
            .context("this command writes files; pass --out-dir or set output.dir")?;
        outcome.write_files(&dir)?;
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
