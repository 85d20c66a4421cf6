//! Recovering the difficulty density f(σ) from an observed coverage curve.
//!
//! `(A − pass@k)/A = Σ_j w_j e^{−σ_j k}` is a discretized Laplace transform, so
//! recovering `w` is an ill-posed inverse problem. We regularize it the
//! simplest way that still yields a density: non-negative least squares on a
//! fixed log-spaced σ grid with a small ridge term.

use serde::{Deserialize, Serialize};

use crate::curve::CoverageCurve;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Qr};

/// Log-spaced grid of σ = ln(1/p) values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaGrid {
    pub min: f64,
    pub max: f64,
    pub cells: usize,
}

impl Default for SigmaGrid {
    fn default() -> Self {
        SigmaGrid {
            min: 1e-4,
            max: 10.0,
            cells: 64,
        }
    }
}

impl SigmaGrid {
    pub fn nodes(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) || self.cells < 2 {
            return Err(Error::domain(format!(
                "sigma grid needs 0 < min < max and >= 2 cells, got {self:?}"
            )));
        }
        let (a, b) = (self.min.ln(), self.max.ln());
        let n = self.cells - 1;
        Ok((0..self.cells)
            .map(|i| (a + (b - a) * i as f64 / n as f64).exp())
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionOptions {
    pub grid: SigmaGrid,
    /// Ridge weight λ added as ‖√λ·w‖² to the least-squares objective.
    pub ridge: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            grid: SigmaGrid::default(),
            ridge: 1e-6,
        }
    }
}

/// Discrete difficulty density: non-negative weights summing to 1 on a σ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyDensity {
    pub sigma_grid: Vec<f64>,
    pub weights: Vec<f64>,
    /// ‖M w − f̃‖₂ over the data rows, before normalization of `w`.
    pub residual_norm: f64,
}

impl DifficultyDensity {
    /// Mean failure probability Σ w_j e^{−σ_j}.
    pub fn mean_failure(&self) -> f64 {
        self.sigma_grid
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * (-s).exp())
            .sum()
    }

    /// Grid index carrying the most mass.
    pub fn mode_index(&self) -> usize {
        self.weights
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &w)| if w > best.1 { (i, w) } else { best })
            .0
    }

    /// Total weight in cells `center − radius ..= center + radius`.
    pub fn mass_near(&self, center: usize, radius: usize) -> f64 {
        let lo = center.saturating_sub(radius);
        let hi = (center + radius).min(self.weights.len() - 1);
        self.weights[lo..=hi].iter().sum()
    }
}

/// Inverts `f̃(k) = (A − pass@k)/A` into a density over σ.
///
/// A `k = 0` row with `f̃(0) = 1` is always included: pass@0 is 0 by
/// definition, and the row pins the total mass.
pub fn invert_difficulty(
    curve: &CoverageCurve,
    ceiling: f64,
    options: &InversionOptions,
) -> Result<DifficultyDensity> {
    if !(ceiling > 0.0 && ceiling <= 1.0) {
        return Err(Error::domain(format!("ceiling must be in (0, 1], got {ceiling}")));
    }
    if ceiling < curve.max_coverage() {
        return Err(Error::domain(format!(
            "ceiling {ceiling} is below the maximum observed coverage {}",
            curve.max_coverage()
        )));
    }
    if !(options.ridge >= 0.0 && options.ridge.is_finite()) {
        return Err(Error::domain("ridge weight must be finite and >= 0"));
    }
    let sigma = options.grid.nodes()?;
    if curve.len() < sigma.len() {
        return Err(Error::domain(format!(
            "inversion on {} grid cells needs at least that many observations, got {}",
            sigma.len(),
            curve.len()
        )));
    }

    let mut ks = vec![0u64];
    ks.extend(curve.ks());
    let mut target = vec![1.0];
    target.extend(curve.points().iter().map(|&(_, c)| (ceiling - c) / ceiling));

    let data_rows = ks.len();
    let cells = sigma.len();
    let ridge_sqrt = options.ridge.sqrt();
    let rows = data_rows + if options.ridge > 0.0 { cells } else { 0 };
    let design = Matrix::from_fn(rows, cells, |i, j| {
        if i < data_rows {
            (-sigma[j] * ks[i] as f64).exp()
        } else if i - data_rows == j {
            ridge_sqrt
        } else {
            0.0
        }
    });
    let mut rhs = target.clone();
    rhs.resize(rows, 0.0);

    let w = nnls(&design, &rhs)?;

    let residual_norm = (0..data_rows)
        .map(|i| {
            let fit: f64 = design.row(i).iter().zip(&w).map(|(a, b)| a * b).sum();
            (fit - target[i]).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::Estimation(
            "inversion produced an all-zero density".into(),
        ));
    }
    Ok(DifficultyDensity {
        sigma_grid: sigma,
        weights: w.iter().map(|v| v / total).collect(),
        residual_norm,
    })
}

/// Lawson–Hanson active-set NNLS: argmin ‖A x − b‖₂ subject to x >= 0.
pub(crate) fn nnls(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    let scale = a.as_slice().iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = 10.0 * f64::EPSILON * scale * scale * m.max(n) as f64;
    let max_outer = 3 * n + 10;

    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];

    let gradient = |x: &[f64]| -> Vec<f64> {
        let resid: Vec<f64> = (0..m)
            .map(|i| b[i] - a.row(i).iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
            .collect();
        (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)] * resid[i]).sum())
            .collect()
    };

    let solve_passive = |passive: &[bool]| -> Vec<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = Matrix::from_fn(m, idx.len(), |i, c| a[(i, idx[c])]);
        let sol = Qr::new(&sub).solve_least_squares(b);
        let mut z = vec![0.0; n];
        for (c, &j) in idx.iter().enumerate() {
            z[j] = sol[c];
        }
        z
    };

    for _ in 0..max_outer {
        let w = gradient(&x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = candidate else {
            return Ok(x);
        };
        passive[t] = true;

        let mut inner = 0;
        loop {
            inner += 1;
            let z = solve_passive(&passive);
            if (0..n).filter(|&j| passive[j]).all(|j| z[j] > 0.0) {
                x = z;
                break;
            }
            if inner == 1 && z[t] <= 0.0 {
                // The new column cannot enter without going negative; numerically
                // its gradient was noise. Stop here.
                passive[t] = false;
                return Ok(x);
            }
            let step = (0..n)
                .filter(|&j| passive[j] && z[j] <= 0.0)
                .map(|j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            for j in 0..n {
                x[j] += step * (z[j] - x[j]);
                if passive[j] && x[j] <= tol {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
            if inner > 3 * n {
                return Err(Error::Estimation("NNLS inner loop did not terminate".into()));
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{pass_at_k_exact, BetaFailureModel};

    fn ks_1_to(n: u64) -> Vec<u64> {
        (1..=n).collect()
    }

    #[test]
    fn nnls_matches_unconstrained_when_interior() {
        let a = Matrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let b: Vec<f64> = (0..6).map(|i| 1.0 + 0.5 * i as f64).collect();
        let x = nnls(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nnls_clamps_negative_directions() {
        // Unconstrained optimum has a negative slope; NNLS must zero it.
        let a = Matrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let b: Vec<f64> = (0..6).map(|i| 3.0 - 0.5 * i as f64).collect();
        let x = nnls(&a, &b).unwrap();
        assert_eq!(x[1], 0.0);
        assert!((x[0] - 1.75).abs() < 1e-12);
    }

    #[test]
    fn point_mass_on_and_off_grid() {
        let opts = InversionOptions::default();
        let nodes = opts.grid.nodes().unwrap();
        for &(j0, off_grid) in &[(40usize, false), (40, true), (20, true), (55, false)] {
            let sigma0 = if off_grid {
                (nodes[j0] * nodes[j0 + 1]).sqrt()
            } else {
                nodes[j0]
            };
            let p = (-sigma0).exp();
            let curve =
                CoverageCurve::from_fn(&crate::curve::log_spaced_ks(1, 20_000, 120), "pm", |k| Ok(-(k as f64 * p.ln()).exp_m1()))
                    .unwrap();
            let d = invert_difficulty(&curve, 1.0, &opts).unwrap();
            let near = if off_grid {
                d.weights[j0] + d.weights[j0 + 1]
            } else {
                d.mass_near(j0, 1)
            };
            assert!(near >= 0.9, "j0={j0} off={off_grid} mass={near}");
        }
    }

    #[test]
    fn beta_roundtrip_recovers_mean() {
        let m = BetaFailureModel::new(1.0, 2.0, 2.0).unwrap();
        let curve =
            CoverageCurve::from_fn(&ks_1_to(64), "beta22", |k| Ok(pass_at_k_exact(&m, k))).unwrap();
        let d = invert_difficulty(&curve, 1.0, &InversionOptions::default()).unwrap();
        assert!((d.mean_failure() - 0.5).abs() <= 0.05, "mean {}", d.mean_failure());
        assert!((d.weights.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert!(d.weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn total_failure_puts_mass_at_smallest_sigma() {
        let curve = CoverageCurve::from_fn(&ks_1_to(64), "zero", |_| Ok(0.0)).unwrap();
        let d = invert_difficulty(&curve, 1.0, &InversionOptions::default()).unwrap();
        assert_eq!(d.mode_index(), 0);
        assert!(d.weights[0] >= 0.9, "w0 = {}", d.weights[0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let curve = CoverageCurve::from_fn(&ks_1_to(64), "c", |k| Ok(0.8 * k as f64 / 64.0)).unwrap();
        let opts = InversionOptions::default();
        assert!(matches!(invert_difficulty(&curve, 0.5, &opts), Err(Error::Domain(_))));
        let short = CoverageCurve::from_fn(&ks_1_to(10), "c", |_| Ok(0.1)).unwrap();
        assert!(invert_difficulty(&short, 1.0, &opts).is_err());
    }
}
