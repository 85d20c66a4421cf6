//! `isl`: fit, predict, simulate and cost out inference scaling laws.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::cost::CostArgs;
use commands::fit::FitArgs;
use commands::predict::PredictArgs;
use commands::simulate::SimulateArgs;
use commands::spectrum::SpectrumArgs;
use commands::Context;
use error::{exit, CliError, CliResult};
use manifest::RunManifest;

/// Environment variable capping the worker thread count.
const THREADS_ENV: &str = "ISL_THREADS";

#[derive(Parser)]
#[command(name = "isl", version, about = "Inference scaling laws for repeated sampling")]
struct Cli {
    /// Suppress human-readable summaries; outputs and warnings are unchanged.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a coverage law to an observed `k,coverage` curve.
    Fit(FitArgs),
    /// Evaluate a model JSON at chosen k.
    Predict(PredictArgs),
    /// Monte Carlo simulation of repeated sampling.
    Simulate(SimulateArgs),
    /// Cost, coverage and loss along a k or budget sweep.
    Cost(CostArgs),
    /// Eigenvalue spectrum of a trial matrix and its decay exponent.
    Spectrum(SpectrumArgs),
    /// Re-run the invocation recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct ReplayArgs {
    /// manifest.json written by an earlier run.
    manifest: PathBuf,
    /// Override the recorded seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn replay(args: &ReplayArgs, ctx: Context) -> CliResult<()> {
    let m = RunManifest::read(&args.manifest)?;
    if m.tool_version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest was written by version {}, replaying with {}",
            m.tool_version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let out = args.out.clone();
    if args.seed.is_some() && m.command != "simulate" {
        eprintln!("warning: `{}` does not use a seed; --seed ignored", m.command);
    }
    macro_rules! rerun {
        ($ty:ty, $run:path) => {{
            let mut a: $ty = m.arguments()?;
            if let Some(dir) = out {
                a.out = dir;
            }
            $run(&a, ctx)
        }};
    }
    match m.command.as_str() {
        "fit" => rerun!(FitArgs, commands::fit::run),
        "predict" => rerun!(PredictArgs, commands::predict::run),
        "cost" => rerun!(CostArgs, commands::cost::run),
        "spectrum" => rerun!(SpectrumArgs, commands::spectrum::run),
        "simulate" => {
            let mut a: SimulateArgs = m.arguments()?;
            if let Some(dir) = out {
                a.out = dir;
            }
            if let Some(seed) = args.seed.or(m.seed) {
                a.seed = seed;
            }
            commands::simulate::run(&a, ctx)
        }
        other => Err(CliError::usage(format!("manifest names unknown command `{other}`"))),
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot configure {threads} threads: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let ctx = Context { quiet: cli.quiet };
    match &cli.command {
        Command::Fit(a) => commands::fit::run(a, ctx),
        Command::Predict(a) => commands::predict::run(a, ctx),
        Command::Simulate(a) => commands::simulate::run(a, ctx),
        Command::Cost(a) => commands::cost::run(a, ctx),
        Command::Spectrum(a) => commands::spectrum::run(a, ctx),
        Command::Replay(a) => replay(a, ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = e.hint() {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
