//! `choreo`: command-line front end for the continuous choreography lab.
//!
//! Every command prints a JSON summary on stdout. Tabular data goes to the
//! CSV file named by `--out`. Exit codes: 0 success, 1 I/O failure,
//! 2 bad arguments or domain, 3 quadrature, 4 collision, 5 non-convergence.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use choreo::Error;

#[derive(Parser)]
#[command(
    name = "choreo",
    version,
    about = "Continuous choreographies of weakly interacting bodies"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct Global {
    /// Worker threads. Defaults to $CHOREO_THREADS, then to all cores
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Use compensated summation in every reduction
    #[arg(long, global = true)]
    reproducible: bool,
    /// Also write the stdout JSON to this file
    #[arg(long, global = true, value_name = "FILE")]
    json: Option<PathBuf>,
    /// JSON object of parameters; its entries override flags
    #[arg(long, global = true, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Model constants c, v², the predicted minimum and λ₁
    Constants(commands::ConstantsArgs),
    /// Coefficients d_k and eigenvalues λ_k of the nonlocal operator
    Spectrum(commands::SpectrumArgs),
    /// Simulate the rotating N-gon
    Simulate(commands::SimulateArgs),
    /// Minimize the action from one or more starts at a single σ
    Minimize(commands::MinimizeArgs),
    /// Multistart minimization over a list of σ values
    Scan(commands::ScanArgs),
    /// Discrete force and polygon frequency against their continuum limits
    Converge(commands::ConvergeArgs),
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
    Io(String),
    /// Results were written but some run did not converge.
    NotConverged(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::NotConverged(_) => 5,
            CliError::Core(e) => match e {
                Error::Domain(_) | Error::Configuration(_) | Error::Format(_) => 2,
                Error::Singularity { .. } | Error::Quadrature(_) | Error::Consistency(_) => 3,
                Error::Collision { .. } | Error::InfiniteAction(_) | Error::DegenerateCurve(_) => 4,
                Error::NonConvergence(_) => 5,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Io(m) | CliError::NotConverged(m) => f.write_str(m),
        }
    }
}

fn setup(global: &Global) -> Result<(), CliError> {
    let threads = match global.threads {
        Some(n) => Some(n),
        None => match std::env::var("CHOREO_THREADS") {
            Ok(s) => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| CliError::Usage(format!("CHOREO_THREADS={s:?}: {e}")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    choreo::reduce::set_reproducible(global.reproducible);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.global.config {
        Some(path) => config::read_config(path)?,
        None => Default::default(),
    };
    macro_rules! dispatch {
        ($args:expr, $run:path) => {{
            let (global, args) = config::merge(&cli.global, &$args, &config)?;
            setup(&global)?;
            $run(&global, args)
        }};
    }
    match cli.command {
        Command::Constants(a) => dispatch!(a, commands::constants),
        Command::Spectrum(a) => dispatch!(a, commands::spectrum),
        Command::Simulate(a) => dispatch!(a, commands::simulate),
        Command::Minimize(a) => dispatch!(a, commands::minimize),
        Command::Scan(a) => dispatch!(a, commands::scan),
        Command::Converge(a) => dispatch!(a, commands::converge),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("choreo: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
