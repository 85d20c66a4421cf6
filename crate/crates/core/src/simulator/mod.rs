//! Monte Carlo versions of the coverage models, used as brute-force oracles.
//!
//! Randomness comes from per-row ChaCha8 streams (see `rng`), so results depend
//! only on the seed and never on the thread count.

mod bits;
mod hutter;
mod rng;

pub use bits::SuccessMatrix;
pub use hutter::hutter_error;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlated::TrialMatrix;
use crate::curve::CoverageCurve;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Qr};
use crate::specfun::ln_choose_ratio;

use rng::{row_stream, Stage};

/// Largest trial count the correlated generator accepts (dense `k × k` basis).
pub const MAX_CORRELATED_TRIALS: usize = 5000;

/// Memory allowed for a packed success matrix or a dense latent matrix.
pub const MATRIX_MEMORY_LIMIT: u128 = 2 * (1 << 30);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    Beta { alpha: f64, beta: f64 },
    Point { p: f64 },
    ZipfHutter { alpha: f64 },
}

impl ModelSpec {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::domain(m));
        match *self {
            ModelSpec::Beta { alpha, beta } => {
                if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
                    return bad(format!("beta shapes must be finite and > 0, got ({alpha}, {beta})"));
                }
            }
            ModelSpec::Point { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("point failure probability must be in [0, 1], got {p}"));
                }
            }
            ModelSpec::ZipfHutter { alpha } => {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return bad(format!("Zipf alpha must be finite and > 0, got {alpha}"));
                }
            }
        }
        Ok(())
    }
}

/// Parses `beta:A,B`, `point:P` and `zipf-hutter:A`.
impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = args
            .split(',')
            .filter(|a| !a.trim().is_empty())
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::domain(format!("model spec `{s}`: `{a}` is not a number")))
            })
            .collect::<Result<_>>()?;
        let spec = match (name.trim(), nums.as_slice()) {
            ("beta", [a, b]) => ModelSpec::Beta { alpha: *a, beta: *b },
            ("point", [p]) => ModelSpec::Point { p: *p },
            ("zipf-hutter", [a]) => ModelSpec::ZipfHutter { alpha: *a },
            _ => {
                return Err(Error::domain(format!(
                    "model spec `{s}` must be one of beta:ALPHA,BETA | point:P | zipf-hutter:ALPHA"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Beta { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
            ModelSpec::Point { p } => write!(f, "point:{p}"),
            ModelSpec::ZipfHutter { alpha } => write!(f, "zipf-hutter:{alpha}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub sample_count: usize,
    pub max_trials: usize,
    pub seed: u64,
    pub model_spec: ModelSpec,
}

impl SimConfig {
    pub fn new(sample_count: usize, max_trials: usize, seed: u64, model_spec: ModelSpec) -> Result<Self> {
        if sample_count == 0 {
            return Err(Error::domain("sample_count must be >= 1"));
        }
        if max_trials == 0 {
            return Err(Error::domain("max_trials must be >= 1"));
        }
        model_spec.validate()?;
        Ok(SimConfig {
            sample_count,
            max_trials,
            seed,
            model_spec,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Fraction of samples with a success among the first `k` trials, for
    /// every `k` in `1..=max_trials`.
    pub empirical_curve: CoverageCurve,
    pub success_matrix: Option<SuccessMatrix>,
    /// Pre-threshold Gaussian errors from the correlated generator.
    pub latent: Option<TrialMatrix>,
    /// Random trial outcomes drawn.
    pub draw_count: u64,
}

/// One failure probability per sample: Beta draws via two Gamma variates, or
/// the point value repeated.
pub fn sample_failure_probs(config: &SimConfig) -> Result<Vec<f64>> {
    match config.model_spec {
        ModelSpec::Point { p } => Ok(vec![p; config.sample_count]),
        ModelSpec::Beta { alpha, beta } => {
            let ga = LnGamma::new(alpha)?;
            let gb = LnGamma::new(beta)?;
            Ok((0..config.sample_count)
                .into_par_iter()
                .map(|i| {
                    let mut rng = row_stream(config.seed, Stage::FailureProbs, i as u64);
                    let lx = ga.sample(&mut rng);
                    let ly = gb.sample(&mut rng);
                    // x/(x+y) computed from logs so tiny shapes cannot give 0/0.
                    1.0 / (1.0 + (ly - lx).exp())
                })
                .collect())
        }
        ModelSpec::ZipfHutter { .. } => Err(Error::WrongOperation(
            "zipf-hutter has no per-sample failure probabilities; use hutter_error".into(),
        )),
    }
}

/// Log of a Gamma(shape, 1) variate. Shapes below 1 use `Gamma(shape+1)·U^{1/shape}`
/// in log space, which stays finite where the variate itself underflows.
struct LnGamma {
    shape: f64,
    dist: Gamma<f64>,
}

impl LnGamma {
    fn new(shape: f64) -> Result<Self> {
        let boosted = if shape < 1.0 { shape + 1.0 } else { shape };
        let dist = Gamma::new(boosted, 1.0)
            .map_err(|e| Error::domain(format!("gamma shape {shape}: {e}")))?;
        Ok(LnGamma { shape, dist })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let g: f64 = self.dist.sample(rng);
        if self.shape < 1.0 {
            let u: f64 = rng.random();
            g.ln() + (1.0 - u).ln() / self.shape
        } else {
            g.ln()
        }
    }
}

fn check_matrix_memory(rows: usize, cols: usize) -> Result<()> {
    let bytes = SuccessMatrix::storage_bytes(rows, cols);
    if bytes > MATRIX_MEMORY_LIMIT {
        return Err(Error::ResourceGuard(format!(
            "a {rows}x{cols} success matrix needs {bytes} bytes; limit is {MATRIX_MEMORY_LIMIT}"
        )));
    }
    Ok(())
}

fn curve_from_first_success(first: &[Option<usize>], k_max: usize, label: String) -> Result<CoverageCurve> {
    let mut hist = vec![0u64; k_max];
    for j in first.iter().flatten() {
        hist[*j] += 1;
    }
    let n = first.len() as f64;
    let mut cum = 0u64;
    let points = hist
        .iter()
        .enumerate()
        .map(|(j, h)| {
            cum += h;
            (j as u64 + 1, cum as f64 / n)
        })
        .collect();
    CoverageCurve::new(points, label)
}

/// Independent Bernoulli trials: sample `i` fails each attempt with
/// probability `probs[i]`. Without `keep_matrix` a row stops at its first
/// success; the curve is the same either way.
pub fn simulate_independent(config: &SimConfig, probs: &[f64], keep_matrix: bool) -> Result<SimResult> {
    let (n, k) = (config.sample_count, config.max_trials);
    if probs.len() != n {
        return Err(Error::domain(format!(
            "expected {n} failure probabilities, got {}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::domain(format!("failure probability {p} outside [0, 1]")));
    }
    if keep_matrix {
        check_matrix_memory(n, k)?;
    }
    let words_per_row = k.div_ceil(64);
    let rows: Vec<(Option<usize>, u64, Vec<u64>)> = probs
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut rng = row_stream(config.seed, Stage::Trials, i as u64);
            let mut first = None;
            let mut draws = 0u64;
            let mut words = if keep_matrix { vec![0u64; words_per_row] } else { Vec::new() };
            for j in 0..k {
                let u: f64 = rng.random();
                draws += 1;
                if u >= p {
                    first.get_or_insert(j);
                    if keep_matrix {
                        words[j / 64] |= 1 << (j % 64);
                    } else {
                        break;
                    }
                }
            }
            (first, draws, words)
        })
        .collect();

    let first: Vec<Option<usize>> = rows.iter().map(|r| r.0).collect();
    let draw_count = rows.iter().map(|r| r.1).sum();
    let success_matrix = keep_matrix.then(|| {
        SuccessMatrix::from_row_words(n, k, rows.into_iter().flat_map(|r| r.2).collect())
    });
    Ok(SimResult {
        empirical_curve: curve_from_first_success(&first, k, config.model_spec.to_string())?,
        success_matrix,
        latent: None,
        draw_count,
    })
}

/// Correlated trials from a Gaussian copula.
///
/// Latent trial vectors are `N(0, Σ)` with `Σ = Q diag(λ) Qᵀ`, `λ_j ∝ j^{−κ}`
/// scaled to trace `k`, and `Q` a random orthogonal matrix. Trial `t` fails when
/// its latent value is below the `p`-quantile of its marginal, so every trial
/// fails with probability exactly `p`. The sample count and seed come from
/// `config`; its model spec only labels the curve.
pub fn simulate_correlated(config: &SimConfig, p: f64, kappa: f64, keep_latent: bool) -> Result<SimResult> {
    let (n, k) = (config.sample_count, config.max_trials);
    if k > MAX_CORRELATED_TRIALS {
        return Err(Error::ResourceGuard(format!(
            "correlated generator builds a dense {k}x{k} basis; at most {MAX_CORRELATED_TRIALS} trials are supported"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("failure probability must be in [0, 1], got {p}")));
    }
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::domain(format!("kappa must be finite and >= 0, got {kappa}")));
    }
    check_matrix_memory(n, k)?;
    if keep_latent && (n as u128) * (k as u128) * 8 > MATRIX_MEMORY_LIMIT {
        return Err(Error::ResourceGuard(format!(
            "a dense {n}x{k} latent matrix exceeds {MATRIX_MEMORY_LIMIT} bytes"
        )));
    }

    let basis = random_orthogonal(k, config.seed);
    let raw: Vec<f64> = (1..=k).map(|j| (j as f64).powf(-kappa)).collect();
    let total: f64 = raw.iter().sum();
    let sqrt_lambda: Vec<f64> = raw.iter().map(|l| (l * k as f64 / total).sqrt()).collect();
    // Row t of `mix` maps standard normals to latent trial t.
    let mix = Matrix::from_fn(k, k, |t, j| basis[(t, j)] * sqrt_lambda[j]);
    let z = inverse_normal_cdf(p);
    let thresholds: Vec<f64> = (0..k)
        .map(|t| {
            let sd = mix.row(t).iter().map(|v| v * v).sum::<f64>().sqrt();
            sd * z
        })
        .collect();

    let words_per_row = k.div_ceil(64);
    let rows: Vec<(Vec<u64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = row_stream(config.seed, Stage::Latent, i as u64);
            let g: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
            let mut words = vec![0u64; words_per_row];
            let mut latent = if keep_latent { Vec::with_capacity(k) } else { Vec::new() };
            for t in 0..k {
                let x: f64 = mix.row(t).iter().zip(&g).map(|(a, b)| a * b).sum();
                if x >= thresholds[t] {
                    words[t / 64] |= 1 << (t % 64);
                }
                if keep_latent {
                    latent.push(x);
                }
            }
            (words, latent)
        })
        .collect();

    let mut words = Vec::with_capacity(n * words_per_row);
    let mut latent = Vec::with_capacity(if keep_latent { n * k } else { 0 });
    for (w, l) in rows {
        words.extend(w);
        latent.extend(l);
    }
    let matrix = SuccessMatrix::from_row_words(n, k, words);
    let first: Vec<Option<usize>> = (0..n).map(|i| matrix.first_success(i)).collect();
    let label = format!("correlated:{p},{kappa}");
    Ok(SimResult {
        empirical_curve: curve_from_first_success(&first, k, label)?,
        latent: if keep_latent { Some(TrialMatrix::new(n, k, latent)?) } else { None },
        success_matrix: Some(matrix),
        draw_count: (n * k) as u64,
    })
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of `R`'s diagonal folded into `Q`.
fn random_orthogonal(k: usize, seed: u64) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut rng = row_stream(seed, Stage::Basis, i as u64);
            (0..k).map(|_| rng.sample(StandardNormal)).collect()
        })
        .collect();
    let g = Matrix::from_row_major(k, k, rows.concat());
    let qr = Qr::new(&g);
    let mut q = qr.q();
    let signs: Vec<f64> = qr.r_diagonal().iter().map(|d| if *d < 0.0 { -1.0 } else { 1.0 }).collect();
    for i in 0..k {
        for j in 0..k {
            q[(i, j)] *= signs[j];
        }
    }
    q
}

/// Φ⁻¹(p) by Acklam's rational approximation (relative error below 1.2e-9).
/// Returns ±∞ at the endpoints.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Success among the first `k` columns.
    #[default]
    FirstK,
    /// `1 − C(T−c, k)/C(T, k)` averaged over rows, `c` the row's successes.
    Unbiased,
}

/// pass@k estimated from a realized success matrix.
pub fn empirical_pass_at_k(matrix: &SuccessMatrix, k: usize, estimator: Estimator) -> Result<f64> {
    let (n, total) = (matrix.rows(), matrix.cols());
    if k == 0 || k > total {
        return Err(Error::domain(format!("k must be in 1..={total}, got {k}")));
    }
    if n == 0 {
        return Err(Error::domain("success matrix has no rows"));
    }
    match estimator {
        Estimator::FirstK => {
            let hits = (0..n).filter(|&r| matrix.count_prefix(r, k) > 0).count();
            Ok(hits as f64 / n as f64)
        }
        Estimator::Unbiased => {
            let mut by_count = vec![0u64; total + 1];
            for r in 0..n {
                by_count[matrix.row_successes(r) as usize] += 1;
            }
            let mut acc = 0.0;
            for (c, &rows) in by_count.iter().enumerate() {
                if rows == 0 {
                    continue;
                }
                let miss = ln_choose_ratio(total as u64, c as u64, k as u64)?.exp();
                acc += rows as f64 * (1.0 - miss);
            }
            Ok(acc / n as f64)
        }
    }
}
