use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use isl_core::correlated::{correlated_loss, pass_at_k_correlated, pass_at_k_correlated_asymptotic};
use isl_core::coverage::{inference_loss, pass_at_k_asymptotic, pass_at_k_exact};
use isl_core::fitting::CoverageModel;

use super::{csv_line, prepare_output_dir, read_model, write_output, Context, KSelection};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub const OUTPUT_FILE: &str = "predictions.csv";

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    /// Model JSON (`kind` beta or correlated).
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub ks: KSelection,
    /// Add a `loss` column (ceiling minus coverage).
    #[arg(long)]
    pub loss: bool,
    /// Use the large-k power law instead of the exact law.
    #[arg(long)]
    pub asymptotic: bool,
    #[arg(long, default_value = "isl-out")]
    pub out: PathBuf,
}

fn evaluate(model: &CoverageModel, k: u64, asymptotic: bool) -> CliResult<(f64, f64)> {
    Ok(match (model, asymptotic) {
        (CoverageModel::Beta(m), false) => (pass_at_k_exact(m, k), inference_loss(m, k, false)?),
        (CoverageModel::Beta(m), true) => {
            let cov = pass_at_k_asymptotic(m, k)?.value;
            (cov, inference_loss(m, k, true)?)
        }
        (CoverageModel::Correlated(m), false) => {
            (pass_at_k_correlated(m, k)?, correlated_loss(m, k)?)
        }
        (CoverageModel::Correlated(m), true) => {
            let cov = pass_at_k_correlated_asymptotic(m, k)?;
            (cov, m.ceiling - cov)
        }
    })
}

pub fn run(args: &PredictArgs, ctx: Context) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let ks = args.ks.resolve()?;
    if args.asymptotic && ks.contains(&0) {
        return Err(CliError::usage("the asymptotic form needs k >= 1"));
    }
    let mut out = String::from(if args.loss { "k,coverage,loss\n" } else { "k,coverage\n" });
    for &k in &ks {
        let (cov, loss) = evaluate(&model, k, args.asymptotic)?;
        let mut fields = vec![k.to_string(), cov.to_string()];
        if args.loss {
            fields.push(loss.to_string());
        }
        out.push_str(&csv_line(&fields));
    }
    prepare_output_dir(&args.out)?;
    let path = write_output(&args.out, OUTPUT_FILE, out.as_bytes())?;
    RunManifest::new("predict", args, vec![args.model.clone()], None, &args.out)?.write(&args.out)?;
    ctx.say(format_args!(
        "{} {} prediction(s) for a {} model written to {}",
        ks.len(),
        if args.asymptotic { "asymptotic" } else { "exact" },
        model.kind(),
        path.display()
    ));
    Ok(())
}
