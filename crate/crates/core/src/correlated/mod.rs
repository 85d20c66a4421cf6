//! Correlated trials and the trial-error spectrum.
//!
//! When repeated attempts on a task are correlated, `k` attempts are worth only
//! `k_eff = H_k(κ)` independent ones and
//!
//! ```text
//! pass@k = A · (1 − p^{H_k(κ)})
//! ```
//!
//! For κ > 1 the harmonic number converges to ζ(κ), so coverage plateaus
//! strictly below `A`. The exponent κ can be read off the power-law decay of
//! the eigenvalues of the trial error second-moment matrix.

mod eigen;

pub use eigen::{
    symmetric_eigen, symmetric_eigen_with, EigenDecomposition, EigenMethod, JACOBI_MAX_ORDER,
    SYMMETRY_TOL,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::specfun::{generalized_harmonic, generalized_harmonic_asymptotic, riemann_zeta};

/// Negative eigenvalues down to this fraction of the largest are rounding noise.
pub const PSD_TOL: f64 = 1e-10;

/// Eigenvalues at or below this fraction of the largest count as zero when
/// fitting κ.
pub const ZERO_EIGEN_TOL: f64 = 1e-12;

/// Fit quality below which [`estimate_kappa`] attaches a warning.
pub const LOW_R2: f64 = 0.9;

/// `(A, p, κ)`: ceiling, shared per-attempt failure probability, and the decay
/// exponent of trial correlations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedTrialModel {
    pub ceiling: f64,
    pub failure: f64,
    pub kappa: f64,
}

impl CorrelatedTrialModel {
    pub fn new(ceiling: f64, failure: f64, kappa: f64) -> Result<Self> {
        if !(ceiling > 0.0 && ceiling <= 1.0) {
            return Err(Error::schema("ceiling", format!("must be in (0, 1], got {ceiling}")));
        }
        if !(0.0..=1.0).contains(&failure) {
            return Err(Error::schema("failure", format!("must be in [0, 1], got {failure}")));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::schema("kappa", format!("must be finite and >= 0, got {kappa}")));
        }
        Ok(CorrelatedTrialModel {
            ceiling,
            failure,
            kappa,
        })
    }

    /// Coverage as `k → ∞`: `A(1 − p^{ζ(κ)})` for κ > 1, otherwise `A` (or 0
    /// when `p = 1`).
    pub fn plateau(&self) -> f64 {
        if self.failure == 1.0 {
            return 0.0;
        }
        if self.kappa <= 1.0 {
            return self.ceiling;
        }
        let zeta = riemann_zeta(self.kappa).expect("kappa > 1 checked above");
        coverage_from_keff(self, zeta)
    }
}

fn coverage_from_keff(model: &CorrelatedTrialModel, keff: f64) -> f64 {
    if model.failure == 1.0 {
        return 0.0;
    }
    model.ceiling * -(keff * model.failure.ln()).exp_m1()
}

/// `k_eff = H_k(κ)`, between 1 and `k`.
pub fn effective_k(k: u64, kappa: f64) -> Result<f64> {
    generalized_harmonic(k, kappa)
}

/// `A(1 − p^{H_k(κ)})`.
pub fn pass_at_k_correlated(model: &CorrelatedTrialModel, k: u64) -> Result<f64> {
    Ok(coverage_from_keff(model, effective_k(k, model.kappa)?))
}

/// As [`pass_at_k_correlated`] but with `H_k(κ)` replaced by its large-k
/// asymptote. Needs κ > 1.
pub fn pass_at_k_correlated_asymptotic(model: &CorrelatedTrialModel, k: u64) -> Result<f64> {
    let keff = generalized_harmonic_asymptotic(k, model.kappa)?;
    Ok(coverage_from_keff(model, keff.max(0.0)))
}

/// Residual failure `A · p^{H_k(κ)}`.
pub fn correlated_loss(model: &CorrelatedTrialModel, k: u64) -> Result<f64> {
    let keff = effective_k(k, model.kappa)?;
    if model.failure == 0.0 {
        return Ok(0.0);
    }
    Ok(model.ceiling * (keff * model.failure.ln()).exp())
}

/// `n × k` per-sample, per-trial error values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMatrix {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl TrialMatrix {
    /// Needs `n >= 2`, `k >= 2` and finite entries. Entries may be signed so that
    /// latent Gaussian errors can be analysed as well as 0/1 failures.
    pub fn new(n: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || k < 2 {
            return Err(Error::domain(format!(
                "trial matrix needs at least 2 samples and 2 trials, got {n}x{k}"
            )));
        }
        if values.len() != n * k {
            return Err(Error::domain(format!(
                "trial matrix {n}x{k} needs {} values, got {}",
                n * k,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite entry at sample {}, trial {}",
                pos / k + 1,
                pos % k + 1
            )));
        }
        Ok(TrialMatrix { n, k, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != k) {
            return Err(Error::domain(format!(
                "row {} has {} entries, expected {k}",
                bad + 1,
                rows[bad].len()
            )));
        }
        TrialMatrix::new(rows.len(), k, rows.concat())
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn trials(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn is_non_negative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }
}

/// `ε_{ab} = (1/n) Σ_i e_{ia} e_{ib}`, the uncentered second-moment matrix over
/// trials. With `centered` each trial column has its mean removed first.
///
/// Entries are computed in parallel, but each one sums over samples in a fixed
/// order, so the result does not depend on the thread count.
pub fn error_correlation_matrix(trials: &TrialMatrix, centered: bool) -> Matrix {
    let (n, k) = (trials.n, trials.k);
    let mut columns = vec![0.0; n * k];
    for i in 0..n {
        for (j, &v) in trials.row(i).iter().enumerate() {
            columns[j * n + i] = v;
        }
    }
    if centered {
        columns.par_chunks_mut(n).for_each(|col| {
            let mean = col.iter().sum::<f64>() / n as f64;
            col.iter_mut().for_each(|v| *v -= mean);
        });
    }
    let inv_n = 1.0 / n as f64;
    let upper: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|a| {
            let ca = &columns[a * n..(a + 1) * n];
            (a..k)
                .map(|b| {
                    let cb = &columns[b * n..(b + 1) * n];
                    ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>() * inv_n
                })
                .collect()
        })
        .collect();
    let mut m = Matrix::zeros(k, k);
    for (a, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            m[(a, a + off)] = v;
            m[(a + off, a)] = v;
        }
    }
    m
}

/// Eigenvalues sorted non-increasing, clamped at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Validates ordering and the PSD tolerance, then clamps small negatives.
    pub fn from_eigenvalues(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(|a, b| b.total_cmp(a));
        let max = values.first().copied().unwrap_or(0.0).max(0.0);
        if let Some(&min) = values.last() {
            if min < -PSD_TOL * max || (max == 0.0 && min < 0.0) {
                return Err(Error::domain(format!(
                    "matrix is not positive semidefinite (eigenvalue {min:.3e} vs max {max:.3e})"
                )));
            }
        }
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(Spectrum {
            eigenvalues: values,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Full spectrum of a symmetric PSD matrix, sorted descending.
pub fn eigen_spectrum(matrix: &Matrix) -> Result<Spectrum> {
    Spectrum::from_eigenvalues(symmetric_eigen(matrix)?.values)
}

/// 1-based inclusive rank interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRange {
    pub first: usize,
    pub last: usize,
}

impl RankRange {
    /// Ranks `2 ..= floor(0.9 k)`: drops the leading eigenvalue and the bottom
    /// tenth.
    pub fn default_for(k: usize) -> RankRange {
        RankRange {
            first: 2,
            last: (k * 9 / 10).max(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub kappa: f64,
    pub r2: f64,
    /// The range actually fitted, after any truncation at zero eigenvalues.
    pub range: RankRange,
    pub warnings: Vec<String>,
}

/// κ as minus the OLS slope of ln λ on ln rank over `range` (default
/// [`RankRange::default_for`]).
pub fn estimate_kappa(spectrum: &Spectrum, range: Option<RankRange>) -> Result<KappaEstimate> {
    let k = spectrum.len();
    let mut range = range.unwrap_or_else(|| RankRange::default_for(k));
    if range.first < 1 || range.last > k || range.first > range.last {
        return Err(Error::domain(format!(
            "rank range {}..={} is not inside 1..={k}",
            range.first, range.last
        )));
    }
    let ev = &spectrum.eigenvalues;
    let max = ev.first().copied().unwrap_or(0.0);
    let mut warnings = Vec::new();
    let zero = |v: f64| v <= ZERO_EIGEN_TOL * max || v <= 0.0;
    if let Some(first_zero) = (range.first..=range.last).find(|&r| zero(ev[r - 1])) {
        if first_zero <= range.first {
            return Err(Error::Estimation(format!(
                "eigenvalue at rank {first_zero} is zero; no positive eigenvalues in the fit range"
            )));
        }
        warnings.push(format!(
            "eigenvalues vanish from rank {first_zero}; fit range truncated to {}..={}",
            range.first,
            first_zero - 1
        ));
        range.last = first_zero - 1;
    }
    let count = range.last - range.first + 1;
    if count < 3 {
        return Err(Error::Estimation(format!(
            "need at least 3 positive eigenvalues to fit kappa, have {count}"
        )));
    }

    let xs: Vec<f64> = (range.first..=range.last).map(|r| (r as f64).ln()).collect();
    let ys: Vec<f64> = (range.first..=range.last).map(|r| ev[r - 1].ln()).collect();
    let nf = count as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let flat = ys.iter().all(|&y| y == ys[0]);
    let syy: f64 = if flat { 0.0 } else { ys.iter().map(|y| (y - my).powi(2)).sum() };
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if flat { 0.0 } else { 1.0 - ss_res / syy };
    let kappa = if flat { 0.0 } else { -slope };
    if flat {
        warnings.push("spectrum is flat over the fit range; r2 is undefined and reported as 0".into());
    } else if r2 < LOW_R2 {
        warnings.push(format!("low fit quality r2 = {r2:.3}; spectrum may not follow a power law"));
    }
    Ok(KappaEstimate {
        kappa,
        r2,
        range,
        warnings,
    })
}
