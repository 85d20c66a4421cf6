use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use isl_core::cost::{
    completions_funded, coverage_of_cost, k_for_target_coverage, loss_of_cost, total_cost, CostMode, CostParams,
};
use isl_core::coverage::{inference_loss, pass_at_k_exact};
use isl_core::{BetaFailureModel, CoverageModel, Error};

use super::{csv_line, prepare_output_dir, read_model, write_json, write_output, Context, KSelection, Span};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub const SWEEP_FILE: &str = "cost.csv";
pub const TARGET_FILE: &str = "target.json";

pub const SWEEP_HEADER: &str = "k,cost,coverage_exact,loss_exact,coverage_asymptotic,loss_asymptotic\n";

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CostArgs {
    /// Beta model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Prompt tokens processed once per task.
    #[arg(long)]
    pub prompt_tokens: u64,
    /// Tokens decoded per completion.
    #[arg(long)]
    pub decode_tokens: u64,
    #[arg(long)]
    pub flops_per_token: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub ks: KSelection,
    /// Sweep budgets (FLOPS) log-spaced over LO:HI instead of k.
    #[arg(long, conflicts_with_all = ["k", "k_range"])]
    pub budget_range: Option<Span<f64>>,
    /// Budgets in the sweep.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Also report the smallest k (and its cost) reaching this coverage.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long, default_value = "isl-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub target: f64,
    pub k: u64,
    pub cost: f64,
    pub coverage: f64,
}

/// One sweep row: completions, FLOPS, and both coverage/loss forms.
fn row(model: &BetaFailureModel, params: &CostParams, k: u64, cost: f64) -> CliResult<String> {
    let asym_cov = coverage_of_cost(model, params, cost, CostMode::Asymptotic)?;
    let asym_loss = loss_of_cost(model, params, cost, CostMode::Asymptotic)?;
    Ok(csv_line(&[
        k.to_string(),
        cost.to_string(),
        pass_at_k_exact(model, k).to_string(),
        inference_loss(model, k, false)?.to_string(),
        asym_cov.to_string(),
        asym_loss.to_string(),
    ]))
}

fn log_spaced(span: Span<f64>, points: usize) -> Vec<f64> {
    if points == 1 || span.lo == span.hi {
        return vec![span.lo];
    }
    let (a, b) = (span.lo.ln(), span.hi.ln());
    (0..points)
        .map(|i| {
            if i + 1 == points {
                span.hi
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn run(args: &CostArgs, ctx: Context) -> CliResult<()> {
    let model = match read_model(&args.model)? {
        CoverageModel::Beta(m) => m,
        CoverageModel::Correlated(_) => {
            return Err(CliError::Core(Error::WrongOperation(
                "cost trade-offs are defined for beta models only".into(),
            )))
        }
    };
    let params = CostParams::new(args.prompt_tokens, args.decode_tokens, args.flops_per_token)?;

    let mut out = String::from(SWEEP_HEADER);
    let rows = match args.budget_range {
        Some(span) => {
            if !(span.lo > 0.0) || args.points == 0 {
                return Err(CliError::usage("--budget-range needs positive budgets and --points >= 1"));
            }
            let budgets = log_spaced(span, args.points);
            for &b in &budgets {
                let k = completions_funded(&params, b)?;
                out.push_str(&row(&model, &params, k, b)?);
            }
            budgets.len()
        }
        None if args.ks.is_empty() && args.target.is_some() => 0,
        None => {
            let ks = args.ks.resolve()?;
            if ks.contains(&0) {
                return Err(CliError::usage("cost sweeps need k >= 1"));
            }
            for &k in &ks {
                out.push_str(&row(&model, &params, k, total_cost(&params, k)?)?);
            }
            ks.len()
        }
    };

    let target = match args.target {
        Some(t) => {
            let k = k_for_target_coverage(&model, t)?;
            Some(TargetReport {
                target: t,
                k,
                cost: total_cost(&params, k)?,
                coverage: pass_at_k_exact(&model, k),
            })
        }
        None => None,
    };

    prepare_output_dir(&args.out)?;
    if rows > 0 {
        write_output(&args.out, SWEEP_FILE, out.as_bytes())?;
    }
    if let Some(t) = &target {
        write_json(&args.out, TARGET_FILE, t)?;
    }
    RunManifest::new("cost", args, vec![args.model.clone()], None, &args.out)?.write(&args.out)?;

    if rows > 0 {
        ctx.say(format_args!("{rows} sweep row(s) written to {}", args.out.join(SWEEP_FILE).display()));
    }
    if let Some(t) = target {
        ctx.say(format_args!(
            "target coverage {}: k = {}, cost = {:e} FLOPS (coverage {:.6})",
            t.target, t.k, t.cost, t.coverage
        ));
    }
    Ok(())
}
