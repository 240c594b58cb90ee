//! `surfperc`: simulations, analytic tables and fits for measurement-only
//! surface-code dynamics.

mod analyze;
mod args;
mod output;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use args::UsageError;

#[derive(Parser, Debug)]
#[command(name = "surfperc", version, about, propagate_version = true)]
struct Cli {
    /// Worker threads [default: all cores].
    #[arg(long, global = true, env = "SURFPERC_THREADS")]
    threads: Option<usize>,
    /// JSON file whose keys mirror the long flags (`d`, `px`, `trials`, ...); flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; a `<out>.manifest.json` is written next to it. Stdout if absent.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One Pauli-measurement round: success rates R, R_X, R_Z per (d, point).
    SingleRound(simulate::SingleRoundArgs),
    /// Alternating Pauli and stabilizer rounds: lifetimes, survival or lost-edge fraction.
    Dynamics(simulate::DynamicsArgs),
    /// First-loss measurement rates by bisection, one row per sample.
    Bisect(simulate::BisectArgs),
    /// Run a named preset sweep.
    Experiment(simulate::ExperimentArgs),
    /// Print the qubit layout, stabilizers and logicals of a distance-d code as JSON.
    Layout(simulate::LayoutArgs),
    /// Fits, crossings, scaling collapse and Δ(d) exponents from CSVs written by this tool.
    #[command(subcommand)]
    Analyze(analyze::AnalyzeCommand),
    /// Closed-form tables.
    #[command(subcommand)]
    Analytic(analyze::AnalyticCommand),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(args::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let file = match &cli.config {
        Some(p) => Some(simulate::ConfigFile::load(p)?),
        None => None,
    };
    let out = cli.out.as_deref();
    match cli.command {
        Command::SingleRound(a) => simulate::single_round(a, file, out),
        Command::Dynamics(a) => simulate::dynamics(a, file, out),
        Command::Bisect(a) => simulate::bisect(a, out),
        Command::Experiment(a) => simulate::experiment(a, file, out),
        Command::Layout(a) => simulate::layout(a, out),
        Command::Analyze(c) => analyze::analyze(c, out),
        Command::Analytic(c) => analyze::analytic(c, out),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<surfperc::Error>() {
        Some(surfperc::Error::InvalidArgument(_) | surfperc::Error::UnknownPreset(_)) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
