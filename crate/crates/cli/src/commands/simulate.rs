use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use isl_core::io::{write_curve_csv, write_trial_matrix_csv};
use isl_core::simulator::{sample_failure_probs, simulate_correlated, simulate_independent};
use isl_core::{Error, ModelSpec, SimConfig, TrialMatrix};

use super::{prepare_output_dir, Context};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub const CURVE_FILE: &str = "curve.csv";
pub const SUCCESSES_FILE: &str = "successes.csv";
pub const LATENT_FILE: &str = "latent.csv";

/// Largest matrix, in cells, that may be written as CSV.
pub const MAX_CSV_CELLS: u128 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Artifact {
    /// Empirical pass@k for k = 1..=kmax.
    Curve,
    /// 0/1 success matrix, one row per sample.
    Successes,
    /// Pre-threshold Gaussian errors of the correlated generator.
    Latent,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// beta:ALPHA,BETA | point:P | zipf-hutter:ALPHA
    #[arg(long)]
    pub model: String,
    /// Number of samples (rows).
    #[arg(long)]
    pub n: usize,
    /// Trials per sample.
    #[arg(long)]
    pub kmax: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Correlate trials with eigenvalue decay exponent KAPPA (point models only).
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "curve")]
    pub emit: Vec<Artifact>,
    #[arg(long, default_value = "isl-out")]
    pub out: PathBuf,
}

fn write_file(
    path: PathBuf,
    f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> isl_core::Result<()>,
) -> CliResult<()> {
    let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w).map_err(|e| match e {
        Error::Io(io) => CliError::io(&path, io),
        other => CliError::Core(other),
    })?;
    w.flush().map_err(|e| CliError::io(&path, e))
}

fn guard_csv(n: usize, k: usize, what: &str) -> CliResult<()> {
    if (n as u128) * (k as u128) > MAX_CSV_CELLS {
        return Err(CliError::Core(Error::ResourceGuard(format!(
            "a {n}x{k} {what} CSV exceeds {MAX_CSV_CELLS} cells"
        ))));
    }
    Ok(())
}

pub fn run(args: &SimulateArgs, ctx: Context) -> CliResult<()> {
    let spec: ModelSpec = args.model.parse()?;
    let config = SimConfig::new(args.n, args.kmax, args.seed, spec)?;
    let want = |a: Artifact| args.emit.contains(&a);
    if want(Artifact::Successes) {
        guard_csv(args.n, args.kmax, "success matrix")?;
    }

    let result = match args.kappa {
        None => {
            if want(Artifact::Latent) {
                return Err(CliError::usage("--emit latent needs a correlated run (--kappa)"));
            }
            let probs = sample_failure_probs(&config)?;
            simulate_independent(&config, &probs, want(Artifact::Successes))?
        }
        Some(kappa) => {
            let p = match spec {
                ModelSpec::Point { p } => p,
                other => {
                    return Err(CliError::Core(Error::WrongOperation(format!(
                        "--kappa needs a point:P model, got {other}"
                    ))))
                }
            };
            if want(Artifact::Latent) {
                guard_csv(args.n, args.kmax, "latent matrix")?;
            }
            simulate_correlated(&config, p, kappa, want(Artifact::Latent))?
        }
    };

    prepare_output_dir(&args.out)?;
    let mut written = Vec::new();
    if want(Artifact::Curve) {
        let path = args.out.join(CURVE_FILE);
        write_file(path.clone(), |w| write_curve_csv(w, &result.empirical_curve))?;
        written.push(path);
    }
    if want(Artifact::Successes) {
        let matrix = result
            .success_matrix
            .as_ref()
            .ok_or_else(|| CliError::usage("the simulator did not keep a success matrix"))?
            .to_success_values()?;
        let path = args.out.join(SUCCESSES_FILE);
        write_file(path.clone(), |w| write_trial_matrix_csv(w, &matrix, true))?;
        written.push(path);
    }
    if want(Artifact::Latent) {
        let latent: &TrialMatrix = result
            .latent
            .as_ref()
            .ok_or_else(|| CliError::usage("the simulator did not keep latent errors"))?;
        let path = args.out.join(LATENT_FILE);
        write_file(path.clone(), |w| write_trial_matrix_csv(w, latent, true))?;
        written.push(path);
    }
    RunManifest::new("simulate", args, Vec::new(), Some(args.seed), &args.out)?.write(&args.out)?;

    let last = result.empirical_curve.points().last().map_or(0.0, |p| p.1);
    ctx.say(format_args!(
        "simulated {} samples x {} trials of {} (seed {}): pass@{} = {last}",
        args.n, args.kmax, args.model, args.seed, args.kmax
    ));
    for p in written {
        ctx.say(format_args!("  wrote {}", p.display()));
    }
    Ok(())
}
