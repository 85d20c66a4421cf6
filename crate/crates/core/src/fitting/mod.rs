//! Least-squares fits of the coverage laws to observed pass@k curves.
//!
//! Parameters live in a box. The optimizer works on unconstrained angles `t`
//! mapped into the box by `lo + (hi − lo)(sin t + 1)/2` (on a log scale for
//! the Beta shapes and for the ceiling's gap above the largest observation),
//! so every trial point is feasible. Eight fixed starts are
//! run and the lowest objective wins.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::correlated::CorrelatedTrialModel;
use crate::coverage::{pass_at_k_exact, BetaFailureModel};
use crate::curve::CoverageCurve;
use crate::error::{Error, Result};
use crate::specfun::generalized_harmonic_many;

use simplex::{minimize, SimplexOptions};

/// Gap kept between the fitted ceiling and the largest observation.
pub const CEILING_MARGIN: f64 = 1e-6;

const RESTARTS: usize = 3;

/// Either coverage law, tagged by `kind` when serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoverageModel {
    Beta(BetaFailureModel),
    Correlated(CorrelatedTrialModel),
}

impl CoverageModel {
    pub fn ceiling(&self) -> f64 {
        match self {
            CoverageModel::Beta(m) => m.ceiling,
            CoverageModel::Correlated(m) => m.ceiling,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CoverageModel::Beta(_) => "beta",
            CoverageModel::Correlated(_) => "correlated",
        }
    }

    pub fn parameter_names(&self) -> [&'static str; 3] {
        match self {
            CoverageModel::Beta(_) => ["ceiling", "alpha", "beta"],
            CoverageModel::Correlated(_) => ["ceiling", "failure", "kappa"],
        }
    }

    pub fn parameters(&self) -> [f64; 3] {
        match self {
            CoverageModel::Beta(m) => [m.ceiling, m.alpha, m.beta],
            CoverageModel::Correlated(m) => [m.ceiling, m.failure, m.kappa],
        }
    }

    /// Same kind of model with new parameters, validated.
    pub fn with_parameters(&self, p: [f64; 3]) -> Result<CoverageModel> {
        Ok(match self {
            CoverageModel::Beta(_) => CoverageModel::Beta(BetaFailureModel::new(p[0], p[1], p[2])?),
            CoverageModel::Correlated(_) => {
                CoverageModel::Correlated(CorrelatedTrialModel::new(p[0], p[1], p[2])?)
            }
        })
    }

    /// pass@k at each `k`.
    pub fn coverage_at(&self, ks: &[u64]) -> Result<Vec<f64>> {
        match self {
            CoverageModel::Beta(m) => Ok(ks.iter().map(|&k| pass_at_k_exact(m, k)).collect()),
            CoverageModel::Correlated(m) => {
                let h = harmonic_or_zero(ks, m.kappa)?;
                Ok(h.iter()
                    .map(|&h| {
                        if m.failure == 1.0 {
                            0.0
                        } else {
                            m.ceiling * -(h * m.failure.ln()).exp_m1()
                        }
                    })
                    .collect())
            }
        }
    }

    /// ln(A − pass@k) at each `k`, evaluated without cancellation.
    pub fn ln_complement_at(&self, ks: &[u64]) -> Result<Vec<f64>> {
        match self {
            CoverageModel::Beta(m) => Ok(ks
                .iter()
                .map(|&k| m.ceiling.ln() + m.ln_moment(k as f64))
                .collect()),
            CoverageModel::Correlated(m) => {
                let h = harmonic_or_zero(ks, m.kappa)?;
                let lnp = m.failure.ln();
                Ok(h.iter()
                    .map(|&h| m.ceiling.ln() + if h == 0.0 { 0.0 } else { h * lnp })
                    .collect())
            }
        }
    }
}

fn harmonic_or_zero(ks: &[u64], kappa: f64) -> Result<Vec<f64>> {
    if ks.contains(&0) {
        let nonzero: Vec<u64> = ks.iter().map(|&k| k.max(1)).collect();
        let h = generalized_harmonic_many(&nonzero, kappa)?;
        Ok(ks.iter().zip(h).map(|(&k, h)| if k == 0 { 0.0 } else { h }).collect())
    } else {
        generalized_harmonic_many(ks, kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Σ (ln(A − model) − ln(A − obs))².
    #[default]
    LogComplement,
    /// Σ (model − obs)².
    Linear,
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    fn validate(&self, name: &str, positive: bool) -> Result<()> {
        let ok = self.lo.is_finite()
            && self.hi.is_finite()
            && self.lo <= self.hi
            && (!positive || self.lo > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "bounds for {name} must satisfy {}lo <= hi, got [{}, {}]",
                if positive { "0 < " } else { "" },
                self.lo,
                self.hi
            )))
        }
    }
}

/// Search box for `(A, α, β)`. The ceiling's lower end is always raised to the
/// largest observation plus [`CEILING_MARGIN`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaBounds {
    pub ceiling: Interval,
    pub alpha: Interval,
    pub beta: Interval,
}

impl Default for BetaBounds {
    fn default() -> Self {
        BetaBounds {
            ceiling: Interval::new(0.0, 1.0),
            alpha: Interval::new(0.05, 50.0),
            beta: Interval::new(0.05, 5.0),
        }
    }
}

/// Search box for `(A, p, κ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedBounds {
    pub ceiling: Interval,
    pub failure: Interval,
    pub kappa: Interval,
}

impl Default for CorrelatedBounds {
    fn default() -> Self {
        CorrelatedBounds {
            ceiling: Interval::new(0.0, 1.0),
            failure: Interval::new(1e-9, 1.0),
            kappa: Interval::new(0.0, 5.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: CoverageModel,
    pub objective: Objective,
    pub objective_value: f64,
    pub converged: bool,
    /// Simplex iterations spent on the winning start, restarts included.
    pub iterations: usize,
    /// Per-point residuals in the objective's space.
    pub residuals: Vec<f64>,
    /// Set when the curve carries no information about the shape (no successes).
    pub degenerate: bool,
}

/// Per-point residuals of `model` against `curve` under `objective`.
pub fn residuals(curve: &CoverageCurve, model: &CoverageModel, objective: Objective) -> Result<Vec<f64>> {
    let ks = curve.ks();
    let obs = curve.coverages();
    match objective {
        Objective::Linear => Ok(model
            .coverage_at(&ks)?
            .iter()
            .zip(&obs)
            .map(|(m, o)| m - o)
            .collect()),
        Objective::LogComplement => {
            let a = model.ceiling();
            if let Some(&(k, c)) = curve.points().iter().find(|&&(_, c)| c >= a) {
                return Err(Error::domain(format!(
                    "log-complement residual undefined: coverage {c} at k={k} is not below the ceiling {a}"
                )));
            }
            Ok(model
                .ln_complement_at(&ks)?
                .iter()
                .zip(&obs)
                .map(|(m, o)| m - (a - o).ln())
                .collect())
        }
    }
}

/// Σ residual².
pub fn objective_value(curve: &CoverageCurve, model: &CoverageModel, objective: Objective) -> Result<f64> {
    Ok(residuals(curve, model, objective)?.iter().map(|r| r * r).sum())
}

#[derive(Debug, Clone, Copy)]
enum Scale {
    Linear,
    Log,
    /// Log scale on the distance above a fixed floor.
    LogAbove(f64),
}

#[derive(Debug, Clone, Copy)]
struct Param {
    lo: f64,
    hi: f64,
    scale: Scale,
}

impl Param {
    fn external(&self, t: f64) -> f64 {
        let u = 0.5 * (t.sin() + 1.0);
        let v = match self.scale {
            Scale::Linear => self.lo + (self.hi - self.lo) * u,
            Scale::Log => (self.lo.ln() + (self.hi.ln() - self.lo.ln()) * u).exp(),
            Scale::LogAbove(floor) => {
                let (a, b) = ((self.lo - floor).ln(), (self.hi - floor).ln());
                floor + (a + (b - a) * u).exp()
            }
        };
        v.clamp(self.lo, self.hi)
    }

    fn internal(u: f64) -> f64 {
        (2.0 * u - 1.0).asin()
    }
}

/// Normalized start positions for (A, θ₁, θ₂): A at mid/high, each shape
/// parameter at low/high.
const STARTS: [[f64; 3]; 8] = [
    [0.5, 0.2, 0.2],
    [0.5, 0.2, 0.8],
    [0.5, 0.8, 0.2],
    [0.5, 0.8, 0.8],
    [0.8, 0.2, 0.2],
    [0.8, 0.2, 0.8],
    [0.8, 0.8, 0.2],
    [0.8, 0.8, 0.8],
];

fn ceiling_param(curve: &CoverageCurve, bounds: Interval) -> Result<Param> {
    bounds.validate("ceiling", false)?;
    let lo = bounds.lo.max(curve.max_coverage() + CEILING_MARGIN).max(f64::MIN_POSITIVE);
    let hi = bounds.hi.min(1.0);
    if lo > hi {
        return Err(Error::domain(format!(
            "ceiling bounds [{}, {}] leave no room above the largest observation {}",
            bounds.lo,
            bounds.hi,
            curve.max_coverage()
        )));
    }
    // The ceiling is searched on a log scale of its gap above the data, which
    // resolves ceilings just above a saturating curve.
    let floor = curve.max_coverage();
    let scale = if lo > floor && hi > lo { Scale::LogAbove(floor) } else { Scale::Linear };
    Ok(Param { lo, hi, scale })
}

fn run_fit(
    curve: &CoverageCurve,
    params: [Param; 3],
    objective: Objective,
    build: impl Fn([f64; 3]) -> CoverageModel,
) -> Result<FitResult> {
    let opts = SimplexOptions::default();
    let to_model = |t: &[f64]| build([params[0].external(t[0]), params[1].external(t[1]), params[2].external(t[2])]);
    let cost = |t: &[f64]| objective_value(curve, &to_model(t), objective).unwrap_or(f64::INFINITY);

    let mut best: Option<(f64, Vec<f64>, usize, bool)> = None;
    for start in STARTS {
        let x0: Vec<f64> = start.iter().map(|&u| Param::internal(u)).collect();
        let mut m = minimize(cost, &x0, &opts);
        let mut iterations = m.iterations;
        for _ in 0..RESTARTS {
            let again = minimize(cost, &m.x, &SimplexOptions { initial_step: 0.05, ..opts });
            iterations += again.iterations;
            let improved = again.f < m.f;
            let converged = again.converged;
            if improved {
                m = again;
            } else {
                m.converged = m.converged && converged;
                break;
            }
            if !m.converged {
                break;
            }
        }
        let better = best.as_ref().is_none_or(|b| m.f < b.0);
        if better {
            best = Some((m.f, m.x, iterations, m.converged));
        }
    }
    let (_, x, iterations, converged) = best.expect("at least one start");
    let model = to_model(&x);
    let result = FitResult {
        model,
        objective,
        objective_value: objective_value(curve, &model, objective)?,
        converged,
        iterations,
        residuals: residuals(curve, &model, objective)?,
        degenerate: curve.max_coverage() == 0.0,
    };
    if !converged {
        return Err(Error::NonConvergence {
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Fits `(A, α, β)` of the Beta-failure law.
pub fn fit_beta_model(curve: &CoverageCurve, bounds: &BetaBounds, objective: Objective) -> Result<FitResult> {
    curve.require_fit_size()?;
    bounds.alpha.validate("alpha", true)?;
    bounds.beta.validate("beta", true)?;
    let params = [
        ceiling_param(curve, bounds.ceiling)?,
        Param { lo: bounds.alpha.lo, hi: bounds.alpha.hi, scale: Scale::Log },
        Param { lo: bounds.beta.lo, hi: bounds.beta.hi, scale: Scale::Log },
    ];
    run_fit(curve, params, objective, |p| {
        CoverageModel::Beta(BetaFailureModel { ceiling: p[0], alpha: p[1], beta: p[2] })
    })
}

/// Fits `(A, p, κ)` of the correlated-trials law. A curve with no successes
/// is answered directly with `p = 1` and flagged degenerate.
pub fn fit_correlated_model(
    curve: &CoverageCurve,
    bounds: &CorrelatedBounds,
    objective: Objective,
) -> Result<FitResult> {
    curve.require_fit_size()?;
    bounds.failure.validate("failure", false)?;
    bounds.kappa.validate("kappa", false)?;
    if bounds.failure.lo < 0.0 || bounds.failure.hi > 1.0 || bounds.kappa.lo < 0.0 {
        return Err(Error::domain("failure bounds must lie in [0, 1] and kappa bounds in [0, inf)"));
    }
    let ceiling = ceiling_param(curve, bounds.ceiling)?;
    if curve.max_coverage() == 0.0 && bounds.failure.hi == 1.0 {
        let model = CoverageModel::Correlated(CorrelatedTrialModel {
            ceiling: ceiling.hi,
            failure: 1.0,
            kappa: bounds.kappa.lo,
        });
        return Ok(FitResult {
            model,
            objective,
            objective_value: objective_value(curve, &model, objective)?,
            converged: true,
            iterations: 0,
            residuals: residuals(curve, &model, objective)?,
            degenerate: true,
        });
    }
    let params = [
        ceiling,
        Param { lo: bounds.failure.lo, hi: bounds.failure.hi, scale: Scale::Linear },
        Param { lo: bounds.kappa.lo, hi: bounds.kappa.hi, scale: Scale::Linear },
    ];
    run_fit(curve, params, objective, |p| {
        CoverageModel::Correlated(CorrelatedTrialModel { ceiling: p[0], failure: p[1], kappa: p[2] })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFit {
    pub rmse: f64,
    pub max_abs_err: f64,
    /// r² of ln(A − coverage); `None` when some observation reaches the ceiling.
    pub r2_logspace: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn goodness_of_fit(curve: &CoverageCurve, model: &CoverageModel) -> Result<GoodnessOfFit> {
    let pred = model.coverage_at(&curve.ks())?;
    let obs = curve.coverages();
    let n = obs.len() as f64;
    let errs: Vec<f64> = pred.iter().zip(&obs).map(|(p, o)| p - o).collect();
    let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let max_abs_err = errs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let mut warnings = Vec::new();
    let r2_logspace = if obs.iter().any(|&o| o >= model.ceiling()) {
        warnings.push(format!(
            "log-space r2 omitted: some coverage reaches the ceiling {}",
            model.ceiling()
        ));
        None
    } else {
        let y: Vec<f64> = obs.iter().map(|o| (model.ceiling() - o).ln()).collect();
        let yhat = model.ln_complement_at(&curve.ks())?;
        let mean = y.iter().sum::<f64>() / n;
        let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        let ss_res: f64 = y.iter().zip(&yhat).map(|(a, b)| (a - b).powi(2)).sum();
        if ss_tot > 0.0 {
            Some(1.0 - ss_res / ss_tot)
        } else {
            warnings.push("log-space r2 omitted: observations are constant".into());
            None
        }
    };
    Ok(GoodnessOfFit {
        rmse,
        max_abs_err,
        r2_logspace,
        warnings,
    })
}

/// Linearized standard errors of the three parameters: `s²(JᵀJ)⁻¹` with `J`
/// the finite-difference Jacobian of the residuals and `s²` the residual
/// variance. `None` when the Jacobian is rank deficient.
pub fn standard_errors(curve: &CoverageCurve, fit: &FitResult) -> Option<[f64; 3]> {
    let m = curve.len();
    if m <= 3 {
        return None;
    }
    let theta = fit.model.parameters();
    let base = residuals(curve, &fit.model, fit.objective).ok()?;
    let eval = |p: [f64; 3]| -> Option<Vec<f64>> {
        let model = fit.model.with_parameters(p).ok()?;
        let r = residuals(curve, &model, fit.objective).ok()?;
        r.iter().all(|v| v.is_finite()).then_some(r)
    };
    let mut jac = vec![[0.0; 3]; m];
    for j in 0..3 {
        let h = 1e-6 * theta[j].abs().max(1e-3);
        let mut up = theta;
        up[j] += h;
        let mut down = theta;
        down[j] -= h;
        let (col, width): (Vec<f64>, f64) = match (eval(up), eval(down)) {
            (Some(a), Some(b)) => (a.iter().zip(&b).map(|(x, y)| x - y).collect(), 2.0 * h),
            (Some(a), None) => (a.iter().zip(&base).map(|(x, y)| x - y).collect(), h),
            (None, Some(b)) => (base.iter().zip(&b).map(|(x, y)| x - y).collect(), h),
            (None, None) => return None,
        };
        for i in 0..m {
            jac[i][j] = col[i] / width;
        }
    }
    let mut jtj = [[0.0; 3]; 3];
    for row in &jac {
        for a in 0..3 {
            for b in 0..3 {
                jtj[a][b] += row[a] * row[b];
            }
        }
    }
    let inv = invert3(jtj)?;
    let s2 = base.iter().map(|r| r * r).sum::<f64>() / (m - 3) as f64;
    Some([0, 1, 2].map(|i| (s2 * inv[i][i]).max(0.0).sqrt()))
}

fn invert3(a: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut aug = [[0.0; 6]; 3];
    for i in 0..3 {
        aug[i][..3].copy_from_slice(&a[i]);
        aug[i][3 + i] = 1.0;
    }
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))?;
        if aug[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        aug.swap(col, piv);
        let p = aug[col][col];
        aug[col].iter_mut().for_each(|v| *v /= p);
        for r in 0..3 {
            if r != col {
                let f = aug[r][col];
                let pivot_row = aug[col];
                aug[r].iter_mut().zip(pivot_row).for_each(|(v, pv)| *v -= f * pv);
            }
        }
    }
    Some([0, 1, 2].map(|i| [aug[i][3], aug[i][4], aug[i][5]]))
}
