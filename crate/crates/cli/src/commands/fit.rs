use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use isl_core::curve::log_spaced_ks;
use isl_core::fitting::{
    fit_beta_model, fit_correlated_model, goodness_of_fit, standard_errors, BetaBounds,
    CorrelatedBounds, GoodnessOfFit,
};
use isl_core::{CoverageCurve, CoverageModel, Error, FitResult, Objective};

use super::{csv_line, prepare_output_dir, read_curve, write_json, write_output, Context};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub const REPORT_FILE: &str = "fit.json";
pub const OBSERVED_FILE: &str = "fitted.csv";
pub const DENSE_FILE: &str = "prediction.csv";

/// Half-width of the reported bands, in standard errors.
pub const BAND_WIDTH_SE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Beta,
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    LogComplement,
    Linear,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Objective {
        match o {
            ObjectiveArg::LogComplement => Objective::LogComplement,
            ObjectiveArg::Linear => Objective::Linear,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Observed curve, CSV with header `k,coverage`.
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelKind::Beta)]
    pub model: ModelKind,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::LogComplement)]
    pub objective: ObjectiveArg,
    /// Points in the dense log-spaced prediction grid.
    #[arg(long, default_value_t = 200)]
    pub dense_points: usize,
    /// Last k of the dense grid; defaults to 100 times the largest observed k.
    #[arg(long)]
    pub dense_max: Option<u64>,
    #[arg(long, default_value = "isl-out")]
    pub out: PathBuf,
}

/// Estimate ± [`BAND_WIDTH_SE`] linearized standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub parameter: String,
    pub estimate: f64,
    pub standard_error: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Mean failure probability and concentration of the fitted Beta law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    pub mean_failure: f64,
    pub concentration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub fit: FitResult,
    pub goodness_of_fit: GoodnessOfFit,
    /// Empty when the linearization is singular.
    pub bands: Vec<Band>,
    pub band_level: String,
    pub interpretation: Option<Interpretation>,
}

impl FitReport {
    pub fn band(&self, parameter: &str) -> Option<&Band> {
        self.bands.iter().find(|b| b.parameter == parameter)
    }
}

fn build_report(curve: &CoverageCurve, fit: FitResult) -> CliResult<FitReport> {
    let goodness_of_fit = goodness_of_fit(curve, &fit.model)?;
    let bands = match standard_errors(curve, &fit) {
        Some(se) => fit
            .model
            .parameter_names()
            .iter()
            .zip(fit.model.parameters())
            .zip(se)
            .map(|((name, estimate), se)| Band {
                parameter: name.to_string(),
                estimate,
                standard_error: se,
                lower: estimate - BAND_WIDTH_SE * se,
                upper: estimate + BAND_WIDTH_SE * se,
            })
            .collect(),
        None => Vec::new(),
    };
    let interpretation = match fit.model {
        CoverageModel::Beta(m) => Some(Interpretation {
            mean_failure: m.mean_failure(),
            concentration: m.concentration(),
        }),
        CoverageModel::Correlated(_) => None,
    };
    Ok(FitReport {
        fit,
        goodness_of_fit,
        bands,
        band_level: format!("estimate ± {BAND_WIDTH_SE} linearized standard errors"),
        interpretation,
    })
}

fn observed_csv(curve: &CoverageCurve, model: &CoverageModel) -> CliResult<String> {
    let fitted = model.coverage_at(&curve.ks())?;
    let mut out = String::from("k,observed,fitted,residual\n");
    for (&(k, obs), fit) in curve.points().iter().zip(fitted) {
        out.push_str(&csv_line(&[
            k.to_string(),
            obs.to_string(),
            fit.to_string(),
            (fit - obs).to_string(),
        ]));
    }
    Ok(out)
}

fn dense_csv(model: &CoverageModel, ks: &[u64]) -> CliResult<String> {
    let mut out = String::from("k,coverage\n");
    for (k, c) in ks.iter().zip(model.coverage_at(ks)?) {
        out.push_str(&csv_line(&[k.to_string(), c.to_string()]));
    }
    Ok(out)
}

fn summary(report: &FitReport) -> String {
    let model = &report.fit.model;
    let objective = match report.fit.objective {
        Objective::LogComplement => "log-complement",
        Objective::Linear => "linear",
    };
    let mut s = format!("{} fit ({objective} objective)\n", model.kind());
    for (name, value) in model.parameter_names().iter().zip(model.parameters()) {
        let band = report
            .band(name)
            .map(|b| format!("  [{:.4}, {:.4}]", b.lower, b.upper))
            .unwrap_or_default();
        s.push_str(&format!("  {name:<8} {value:.6}{band}\n"));
    }
    if let Some(i) = &report.interpretation {
        s.push_str(&format!(
            "  mean failure alpha/(alpha+beta) = {:.4}\n  concentration alpha+beta = {:.4}\n",
            i.mean_failure, i.concentration
        ));
    }
    let g = &report.goodness_of_fit;
    s.push_str(&format!("  rmse {:.3e}, max |err| {:.3e}", g.rmse, g.max_abs_err));
    if let Some(r2) = g.r2_logspace {
        s.push_str(&format!(", log-space r2 {r2:.5}"));
    }
    if report.bands.is_empty() {
        s.push_str("\n  bands unavailable: the fit's linearization is singular");
    } else {
        s.push_str(&format!("\n  bands: {}", report.band_level));
    }
    s
}

pub fn run(args: &FitArgs, ctx: Context) -> CliResult<()> {
    let curve = read_curve(&args.curve)?;
    let objective = Objective::from(args.objective);
    let outcome = match args.model {
        ModelKind::Beta => fit_beta_model(&curve, &BetaBounds::default(), objective),
        ModelKind::Correlated => fit_correlated_model(&curve, &CorrelatedBounds::default(), objective),
    };
    // A non-converged fit still produces best-effort outputs before failing.
    let (fit, failure) = match outcome {
        Ok(fit) => (fit, None),
        Err(Error::NonConvergence { best }) => {
            let err = Error::NonConvergence { best: best.clone() };
            (*best, Some(err))
        }
        Err(e) => return Err(e.into()),
    };

    let last_k = curve.points().last().map_or(1, |p| p.0);
    let dense_max = args.dense_max.unwrap_or(last_k.saturating_mul(100));
    if args.dense_points < 2 {
        return Err(CliError::usage("--dense-points needs at least 2"));
    }
    let dense_ks = log_spaced_ks(1, dense_max.max(1), args.dense_points);

    let report = build_report(&curve, fit)?;
    prepare_output_dir(&args.out)?;
    write_json(&args.out, REPORT_FILE, &report)?;
    write_output(&args.out, OBSERVED_FILE, observed_csv(&curve, &report.fit.model)?.as_bytes())?;
    write_output(&args.out, DENSE_FILE, dense_csv(&report.fit.model, &dense_ks)?.as_bytes())?;
    RunManifest::new("fit", args, vec![args.curve.clone()], None, &args.out)?.write(&args.out)?;

    for w in &report.goodness_of_fit.warnings {
        eprintln!("warning: {w}");
    }
    if report.fit.degenerate {
        eprintln!("warning: the curve has no successes; the fitted shape is not identified");
    }
    ctx.say(summary(&report));
    match failure {
        Some(err) => Err(err.into()),
        None => Ok(()),
    }
}
