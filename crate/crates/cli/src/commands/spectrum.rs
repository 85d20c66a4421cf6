use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use isl_core::correlated::{eigen_spectrum, error_correlation_matrix, estimate_kappa};
use isl_core::fitting::{fit_correlated_model, CorrelatedBounds};
use isl_core::{Error, KappaEstimate, Objective, RankRange, TrialMatrix};

use super::{csv_line, prepare_output_dir, read_curve, read_matrix, write_json, write_output, Context};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub const EIGENVALUES_FILE: &str = "eigenvalues.csv";
pub const REPORT_FILE: &str = "kappa.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Values {
    /// Entries are error values (1 = failure for binary data).
    Errors,
    /// Entries are 0/1 successes; errors are taken as `1 - value`.
    Successes,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    /// Trial matrix CSV, one row per sample.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, value_enum, default_value_t = Values::Errors)]
    pub values: Values,
    /// Remove each trial's mean before forming the second-moment matrix.
    #[arg(long)]
    pub centered: bool,
    /// First rank of the power-law fit (1-based).
    #[arg(long)]
    pub first_rank: Option<usize>,
    /// Last rank of the power-law fit (inclusive).
    #[arg(long)]
    pub last_rank: Option<usize>,
    /// Coverage curve to fit the correlated law on; its exponent is reported
    /// next to the spectral one.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, default_value = "isl-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub samples: usize,
    pub trials: usize,
    pub centered: bool,
    #[serde(flatten)]
    pub estimate: KappaEstimate,
    /// κ of the correlated law fitted to `--curve`. Not expected to equal the
    /// spectral exponent.
    pub curve_kappa: Option<f64>,
}

fn as_errors(m: TrialMatrix, values: Values) -> CliResult<TrialMatrix> {
    match values {
        Values::Errors => Ok(m),
        Values::Successes => {
            let flipped = m.as_slice().iter().map(|v| 1.0 - v).collect();
            Ok(TrialMatrix::new(m.samples(), m.trials(), flipped)?)
        }
    }
}

pub fn run(args: &SpectrumArgs, ctx: Context) -> CliResult<()> {
    let matrix = as_errors(read_matrix(&args.matrix)?, args.values)?;
    let k = matrix.trials();
    let range = match (args.first_rank, args.last_rank) {
        (None, None) => None,
        (first, last) => {
            let default = RankRange::default_for(k);
            Some(RankRange {
                first: first.unwrap_or(default.first),
                last: last.unwrap_or(default.last),
            })
        }
    };
    if let Some(r) = range {
        if r.first == 0 {
            return Err(CliError::usage("ranks are 1-based"));
        }
    }
    let spectrum = eigen_spectrum(&error_correlation_matrix(&matrix, args.centered))?;
    let estimate = estimate_kappa(&spectrum, range)?;
    let curve_kappa = match &args.curve {
        Some(path) => {
            let curve = read_curve(path)?;
            match fit_correlated_model(&curve, &CorrelatedBounds::default(), Objective::default()) {
                Ok(fit) => Some(fit.model.parameters()[2]),
                Err(Error::NonConvergence { best }) => {
                    eprintln!("warning: correlated fit of {} did not converge", path.display());
                    Some(best.model.parameters()[2])
                }
                Err(e) => {
                    eprintln!("warning: no correlated fit of {}: {e}", path.display());
                    None
                }
            }
        }
        None => None,
    };

    let mut csv = String::from("rank,eigenvalue\n");
    for (i, v) in spectrum.eigenvalues.iter().enumerate() {
        csv.push_str(&csv_line(&[(i + 1).to_string(), v.to_string()]));
    }
    let report = SpectrumReport {
        samples: matrix.samples(),
        trials: k,
        centered: args.centered,
        estimate,
        curve_kappa,
    };
    prepare_output_dir(&args.out)?;
    write_output(&args.out, EIGENVALUES_FILE, csv.as_bytes())?;
    write_json(&args.out, REPORT_FILE, &report)?;
    let inputs = std::iter::once(args.matrix.clone()).chain(args.curve.clone()).collect();
    RunManifest::new("spectrum", args, inputs, None, &args.out)?.write(&args.out)?;

    for w in &report.estimate.warnings {
        eprintln!("warning: {w}");
    }
    let e = &report.estimate;
    ctx.say(format_args!(
        "{}x{} matrix: kappa = {:.4}, r2 = {:.4} over ranks {}..={}",
        report.samples, report.trials, e.kappa, e.r2, e.range.first, e.range.last
    ));
    if let Some(k) = report.curve_kappa {
        ctx.say(format_args!("  kappa of the correlated law fitted to the curve = {k:.4}"));
    }
    Ok(())
}
