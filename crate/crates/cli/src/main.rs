mod commands;
mod error;
mod input;
mod report;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::report::{envelope, write_report, Outcome};

/// Germ reconstruction, conditioning and zero-geometry experiments over
/// real, complex, rational and p-adic fields.
#[derive(Debug, Parser)]
#[command(name = "germinate", version)]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Also write the per-row table as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Omit the timestamp and elapsed time, making reports byte-identical
    /// across runs.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reconstruct the homogeneous parts of a germ from its slices.
    Reconstruct(commands::SliceArgs),
    /// Estimate the convergence radius of a germ.
    Radius(commands::RadiusArgs),
    /// Fit the conditioning envelope of a node set.
    Condition(commands::ConditionArgs),
    /// Envelope constants of roots-of-unity node sets as r and eps refine.
    PerfectInterp(commands::PerfectInterpArgs),
    /// Coefficients and sup norms of the ((z - 3z^3)/2)^n family.
    Counterexample(commands::CounterexampleArgs),
    /// Newton polygon, root norms and zero-free slice radii.
    Zeros(commands::ZerosArgs),
    /// Spread constants of a Cantor embedding.
    Spread(commands::SpreadArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Reconstruct(_) => "reconstruct",
            Command::Radius(_) => "radius",
            Command::Condition(_) => "condition",
            Command::PerfectInterp(_) => "perfect-interp",
            Command::Counterexample(_) => "counterexample",
            Command::Zeros(_) => "zeros",
            Command::Spread(_) => "spread",
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Radius(a) => commands::radius(a),
        Command::Condition(a) => commands::condition(a, cli.seed),
        Command::PerfectInterp(a) => commands::perfect_interp(a, cli.seed),
        Command::Counterexample(a) => commands::counterexample(a),
        Command::Zeros(a) => commands::zeros(a, cli.seed),
        Command::Spread(a) => commands::spread(a),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Ok(t) = std::env::var("GERMINATE_THREADS") {
        let n: usize = t.parse().map_err(|_| CliError::invalid(format!("GERMINATE_THREADS={t:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let start = Instant::now();
    let outcome = dispatch(cli)?;
    let elapsed = (!cli.no_timestamp).then(|| start.elapsed());
    if let Some(path) = &cli.csv {
        outcome.table.write(path)?;
    }
    write_report(&envelope(cli.command.name(), &outcome, elapsed), cli.output.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = catch_unwind(AssertUnwindSafe(|| run(&cli)))
        .unwrap_or_else(|_| Err(CliError::Internal("unexpected panic".into())));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("germinate: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
