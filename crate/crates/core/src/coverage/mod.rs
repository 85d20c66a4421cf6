//! Beta-failure coverage model.
//!
//! Each task fails a single attempt with probability `p ~ Beta(alpha, beta)`;
//! attempts are independent given `p`. Averaging `p^k` over the Beta law gives
//!
//! ```text
//! <p^k>   = Γ(β)Γ(k+α) / (B(α,β) Γ(k+α+β))
//! pass@k  = A · (1 − <p^k>)
//! loss(k) = A · <p^k>                 ~ A · Γ(β)/B(α,β) · k^−β  as k → ∞
//! ```
//!
//! with `A` the ceiling (the best coverage the model can ever reach). All gamma
//! ratios are evaluated as log-gamma differences so `k` can run into the
//! billions without overflow.

mod inverse;

pub use inverse::{invert_difficulty, DifficultyDensity, InversionOptions, SigmaGrid};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{ln_beta, ln_gamma_ratio_unchecked};

/// Relative tolerance on `1 − pass@k/A` used to report where the large-k
/// asymptote becomes trustworthy.
pub const ASYMPTOTE_REL_TOL: f64 = 0.01;

/// `(A, α, β)` of the Beta-failure coverage law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFailureModel {
    pub ceiling: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl BetaFailureModel {
    pub fn new(ceiling: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(ceiling > 0.0 && ceiling <= 1.0) {
            return Err(Error::schema("ceiling", format!("must be in (0, 1], got {ceiling}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::schema("alpha", format!("must be finite and > 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::schema("beta", format!("must be finite and > 0, got {beta}")));
        }
        Ok(BetaFailureModel {
            ceiling,
            alpha,
            beta,
        })
    }

    /// Mean per-attempt failure probability α/(α+β).
    pub fn mean_failure(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// α+β; larger values mean task difficulties cluster tighter around the mean.
    pub fn concentration(&self) -> f64 {
        self.alpha + self.beta
    }

    /// ln <p^k> for real `k >= 0`.
    pub fn ln_moment(&self, k: f64) -> f64 {
        debug_assert!(k >= 0.0);
        ln_gamma_ratio_unchecked(self.alpha, self.beta)
            - ln_gamma_ratio_unchecked(k + self.alpha, self.beta)
    }

    /// ln(Γ(β)/B(α,β)) = ln Γ(α+β) − ln Γ(α), the prefactor of the k^−β tail.
    pub fn ln_tail_prefactor(&self) -> f64 {
        ln_gamma_ratio_unchecked(self.alpha, self.beta)
    }

    /// ln B(α, β).
    pub fn ln_beta_fn(&self) -> f64 {
        ln_beta(self.alpha, self.beta).expect("model invariants guarantee positive shapes")
    }

    fn asymptotic_loss_at(&self, k: f64) -> f64 {
        let raw = self.ceiling * (self.ln_tail_prefactor() - self.beta * k.ln()).exp();
        raw.min(self.ceiling)
    }

    fn asymptote_rel_deviation(&self, k: u64) -> f64 {
        let kf = k as f64;
        (self.ln_tail_prefactor() - self.beta * kf.ln() - self.ln_moment(kf))
            .exp_m1()
            .abs()
    }

    /// Smallest `k` (located by doubling then bisection) from which the
    /// asymptotic loss is within [`ASYMPTOTE_REL_TOL`] of the exact one.
    pub fn asymptote_valid_from(&self) -> u64 {
        let ok = |k: u64| self.asymptote_rel_deviation(k) <= ASYMPTOTE_REL_TOL;
        let mut hi = 1u64;
        // Require the next two doublings to stay inside the tolerance too, so a
        // transient dip at small k is not mistaken for convergence.
        while !(ok(hi) && ok(hi.saturating_mul(2)) && ok(hi.saturating_mul(4))) {
            if hi >= 1 << 62 {
                return u64::MAX;
            }
            hi *= 2;
        }
        let mut lo = hi / 2;
        if lo == 0 || ok(lo) {
            return if lo == 0 { hi } else { lo };
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Large-k approximation of pass@k together with the `k` from which it is
/// within [`ASYMPTOTE_REL_TOL`] of the exact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticPassAtK {
    pub value: f64,
    pub valid_from: u64,
}

/// Exact pass@k. Returns exactly 0 at `k = 0`.
pub fn pass_at_k_exact(model: &BetaFailureModel, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    -model.ceiling * model.ln_moment(k as f64).exp_m1()
}

/// pass@k ≈ A·(1 − Γ(β)k^−β/B(α,β)).
///
/// This is an approximation: at small `k` the tail term can exceed 1, in which
/// case the loss is capped at `A` and the coverage reported as 0.
pub fn pass_at_k_asymptotic(model: &BetaFailureModel, k: u64) -> Result<AsymptoticPassAtK> {
    if k == 0 {
        return Err(Error::domain("asymptotic pass@k needs k >= 1"));
    }
    Ok(AsymptoticPassAtK {
        value: model.ceiling - model.asymptotic_loss_at(k as f64),
        valid_from: model.asymptote_valid_from(),
    })
}

/// Inference loss A·<p^k>, or its large-k power law when `asymptotic` is set.
pub fn inference_loss(model: &BetaFailureModel, k: u64, asymptotic: bool) -> Result<f64> {
    if asymptotic {
        if k == 0 {
            return Err(Error::domain("asymptotic inference loss needs k >= 1"));
        }
        return Ok(model.asymptotic_loss_at(k as f64));
    }
    Ok(model.ceiling * model.ln_moment(k as f64).exp())
}

/// Density of σ = ln(1/p): f(σ) = e^{−ασ}(1 − e^{−σ})^{β−1} / B(α,β).
///
/// `<p^k>` is the Laplace transform of `f` evaluated at `k`. The ceiling plays no
/// role here.
pub fn difficulty_density(model: &BetaFailureModel, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::domain(format!(
            "difficulty density needs sigma > 0, got {sigma}"
        )));
    }
    let ln_f = -model.alpha * sigma + (model.beta - 1.0) * (-(-sigma).exp_m1()).ln()
        - model.ln_beta_fn();
    Ok(ln_f.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(a: f64, al: f64, be: f64) -> BetaFailureModel {
        BetaFailureModel::new(a, al, be).unwrap()
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(BetaFailureModel::new(0.0, 1.0, 1.0).is_err());
        assert!(BetaFailureModel::new(1.01, 1.0, 1.0).is_err());
        assert!(BetaFailureModel::new(1.0, 0.0, 1.0).is_err());
        assert!(BetaFailureModel::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn uniform_failure_gives_k_over_k_plus_one() {
        let m = model(1.0, 1.0, 1.0);
        assert_eq!(pass_at_k_exact(&m, 0), 0.0);
        assert!((pass_at_k_exact(&m, 3) - 0.75).abs() < 1e-15);
        assert!((inference_loss(&m, 3, false).unwrap() - 0.25).abs() < 1e-15);
        let asym = pass_at_k_asymptotic(&m, 100).unwrap();
        assert!((asym.value - 0.99).abs() < 1e-14);
        assert!((pass_at_k_exact(&m, 100) - 100.0 / 101.0).abs() < 1e-14);
    }

    #[test]
    fn pass_at_one_is_complement_of_mean() {
        for &(a, al, be) in &[(0.9, 5.0, 0.35), (1.0, 0.3, 7.0), (0.5, 2.0, 2.0)] {
            let m = model(a, al, be);
            let want = a * be / (al + be);
            assert!((pass_at_k_exact(&m, 1) - want).abs() < 1e-14);
            assert!((1.0 - pass_at_k_exact(&model(1.0, al, be), 1) - m.mean_failure()).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_at_zero_is_ceiling() {
        let m = model(0.9, 5.0, 0.35);
        assert_eq!(inference_loss(&m, 0, false).unwrap(), 0.9);
        assert!(inference_loss(&m, 0, true).is_err());
        assert!(pass_at_k_asymptotic(&m, 0).is_err());
    }

    #[test]
    fn asymptote_close_at_large_k() {
        let m = model(0.9, 5.0, 0.35);
        let exact = pass_at_k_exact(&m, 10_000);
        let asym = pass_at_k_asymptotic(&m, 10_000).unwrap();
        assert!((exact - asym.value).abs() <= 1e-3);
    }

    #[test]
    fn asymptote_threshold_is_honest() {
        for &(al, be) in &[(5.0, 0.35), (1.0, 1.0), (0.2, 0.1), (20.0, 2.0), (0.5, 3.0)] {
            let m = model(1.0, al, be);
            let kstar = m.asymptote_valid_from();
            assert!(kstar < u64::MAX);
            let rel = |k: u64| {
                let exact = inference_loss(&m, k, false).unwrap();
                let asym = (m.ln_tail_prefactor() - be * (k as f64).ln()).exp();
                (asym / exact - 1.0).abs()
            };
            let mut k = kstar;
            while k < kstar.saturating_mul(1000).max(1000) {
                assert!(rel(k) <= ASYMPTOTE_REL_TOL + 1e-12, "al={al} be={be} k={k} k*={kstar}");
                k = k + 1 + k / 7;
            }
            if kstar > 1 {
                assert!(rel(kstar - 1) > ASYMPTOTE_REL_TOL);
            }
        }
    }

    #[test]
    fn asymptote_deviation_shrinks() {
        let m = model(0.9, 5.0, 0.35);
        let d: Vec<f64> = [100u64, 1000, 10_000].iter().map(|&k| m.asymptote_rel_deviation(k)).collect();
        assert!(d[0] > d[1] && d[1] > d[2]);
    }

    #[test]
    fn asymptotic_loss_slope_is_minus_beta() {
        let m = model(0.9, 5.0, 0.35);
        let (k1, k2) = (1_000u64, 100_000u64);
        let l1 = inference_loss(&m, k1, true).unwrap();
        let l2 = inference_loss(&m, k2, true).unwrap();
        let slope = (l2.ln() - l1.ln()) / ((k2 as f64).ln() - (k1 as f64).ln());
        assert!((slope + 0.35).abs() < 1e-6);
    }

    #[test]
    fn density_special_cases() {
        let m = model(1.0, 1.0, 1.0);
        for &s in &[0.01, 0.5, 3.0] {
            assert!((difficulty_density(&m, s).unwrap() - (-s).exp()).abs() < 1e-14);
        }
        assert!(difficulty_density(&m, 0.0).is_err());
        let hard = model(1.0, 5.0, 0.35);
        // σ^{β−1} blow-up at the origin
        let a = difficulty_density(&hard, 1e-6).unwrap();
        let b = difficulty_density(&hard, 1e-8).unwrap();
        let slope = (b.ln() - a.ln()) / ((1e-8f64).ln() - (1e-6f64).ln());
        assert!((slope - (0.35 - 1.0)).abs() < 1e-3);
    }

    // Quadrature oracle on u = ln σ: ∫ f(σ) dσ = ∫ f(e^u) e^u du.
    fn integrate_sigma(f: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = (-80.0f64, 6.0f64);
        let n = 400_000;
        let h = (hi - lo) / n as f64;
        let g = |u: f64| {
            let s = u.exp();
            f(s) * s
        };
        let mut acc = g(lo) + g(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn density_normalizes_and_reproduces_mean() {
        for &(al, be) in &[(1.0, 1.0), (5.0, 0.35), (2.0, 2.0), (0.5, 3.0)] {
            let m = model(1.0, al, be);
            let total = integrate_sigma(|s| difficulty_density(&m, s).unwrap());
            assert!((total - 1.0).abs() < 1e-6, "al={al} be={be} total={total}");
            let mean_p = integrate_sigma(|s| (-s).exp() * difficulty_density(&m, s).unwrap());
            assert!((mean_p - al / (al + be)).abs() < 1e-6);
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn complement_identity(a in 0.01f64..=1.0, al in 0.05f64..50.0, be in 0.05f64..5.0, k in 0u64..2_000_000) {
                let m = BetaFailureModel::new(a, al, be).unwrap();
                let sum = pass_at_k_exact(&m, k) + inference_loss(&m, k, false).unwrap();
                prop_assert!((sum - a).abs() <= 1e-10);
            }

            #[test]
            fn monotone_in_k(al in 0.05f64..50.0, be in 0.05f64..5.0, k in 0u64..100_000) {
                let m = BetaFailureModel::new(1.0, al, be).unwrap();
                let lo = pass_at_k_exact(&m, k);
                let hi = pass_at_k_exact(&m, k + 1);
                prop_assert!(hi >= lo);
                // Strict growth is only visible when the step exceeds the
                // spacing of doubles near the ceiling.
                let step = inference_loss(&m, k, false).unwrap() - inference_loss(&m, k + 1, false).unwrap();
                if hi < 1.0 - 1e-12 && step > 4.0 * f64::EPSILON {
                    prop_assert!(hi > lo);
                }
                prop_assert!(inference_loss(&m, k + 1, false).unwrap() < inference_loss(&m, k, false).unwrap()
                    || hi >= 1.0 - 1e-12);
                prop_assert!(hi <= 1.0);
            }
        }
    }
}
