//! FLOPS accounting for repeated sampling and the coverage a budget buys.
//!
//! One prompt of `N_p` tokens is processed once and `k` completions of `N_d`
//! tokens each are decoded, so `C = F·N_p + F·N_d·k`. Inverting for `k` and
//! substituting into the large-k loss gives coverage as a function of `C`.

use serde::{Deserialize, Serialize};

use crate::coverage::{inference_loss, pass_at_k_exact, BetaFailureModel};
use crate::error::{Error, Result};

/// Relative slack when converting a budget into whole completions, so budgets
/// computed as `total_cost(k)` are not floored to `k − 1` by rounding.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub prompt_tokens: u64,
    pub decode_tokens: u64,
    pub flops_per_token: f64,
}

impl CostParams {
    pub fn new(prompt_tokens: u64, decode_tokens: u64, flops_per_token: f64) -> Result<Self> {
        if prompt_tokens == 0 {
            return Err(Error::schema("prompt_tokens", "must be > 0"));
        }
        if decode_tokens == 0 {
            return Err(Error::schema("decode_tokens", "must be > 0"));
        }
        if !(flops_per_token.is_finite() && flops_per_token > 0.0) {
            return Err(Error::schema(
                "flops_per_token",
                format!("must be finite and > 0, got {flops_per_token}"),
            ));
        }
        Ok(CostParams {
            prompt_tokens,
            decode_tokens,
            flops_per_token,
        })
    }

    /// Cost of the prompt plus one completion.
    pub fn min_budget(&self) -> f64 {
        total_cost_unchecked(self, 1)
    }

    /// Completions a budget pays for beyond the prompt, as a real number.
    pub fn affordable_completions(&self, budget: f64) -> f64 {
        (budget / self.flops_per_token - self.prompt_tokens as f64) / self.decode_tokens as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    /// Large-k power law with real-valued `k`.
    #[default]
    Asymptotic,
    /// Whole completions and the exact coverage law.
    Exact,
}

fn total_cost_unchecked(params: &CostParams, k: u64) -> f64 {
    let f = params.flops_per_token;
    params.prompt_tokens as f64 * f + params.decode_tokens as f64 * f * k as f64
}

/// `C = N_p·F + N_d·F·k`.
pub fn total_cost(params: &CostParams, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("total cost needs k >= 1"));
    }
    Ok(total_cost_unchecked(params, k))
}

fn affordable(params: &CostParams, budget: f64) -> Result<f64> {
    let x = params.affordable_completions(budget);
    if !(budget.is_finite() && x >= 1.0 - FLOOR_SLACK) {
        return Err(Error::domain(format!(
            "budget {budget:e} FLOPS does not fund one completion; the minimum feasible budget is {:e}",
            params.min_budget()
        )));
    }
    Ok(x.max(1.0))
}

fn whole_completions(x: f64) -> u64 {
    (x * (1.0 + FLOOR_SLACK)).floor() as u64
}

/// Whole completions `budget` FLOPS pays for.
pub fn completions_funded(params: &CostParams, budget: f64) -> Result<u64> {
    Ok(whole_completions(affordable(params, budget)?))
}

/// Coverage bought by `budget` FLOPS.
///
/// The asymptotic mode is only accurate at large `k`; at small `k` it
/// underestimates coverage and is floored at 0.
pub fn coverage_of_cost(
    model: &BetaFailureModel,
    params: &CostParams,
    budget: f64,
    mode: CostMode,
) -> Result<f64> {
    let x = affordable(params, budget)?;
    Ok(match mode {
        CostMode::Asymptotic => model.ceiling - asymptotic_loss(model, x),
        CostMode::Exact => pass_at_k_exact(model, whole_completions(x)),
    })
}

/// Residual loss after spending `budget` FLOPS.
pub fn loss_of_cost(
    model: &BetaFailureModel,
    params: &CostParams,
    budget: f64,
    mode: CostMode,
) -> Result<f64> {
    let x = affordable(params, budget)?;
    match mode {
        CostMode::Asymptotic => Ok(asymptotic_loss(model, x)),
        CostMode::Exact => inference_loss(model, whole_completions(x), false),
    }
}

fn asymptotic_loss(model: &BetaFailureModel, x: f64) -> f64 {
    let raw = model.ceiling * (model.ln_tail_prefactor() - model.beta * x.ln()).exp();
    raw.min(model.ceiling)
}

/// Smallest `k` with `pass_at_k_exact(model, k) >= target`.
pub fn k_for_target_coverage(model: &BetaFailureModel, target: f64) -> Result<u64> {
    if !(target > 0.0) {
        return Err(Error::domain(format!("target coverage must be > 0, got {target}")));
    }
    if target >= model.ceiling {
        return Err(Error::Infeasible(format!(
            "target coverage {target} is not below the ceiling {}",
            model.ceiling
        )));
    }
    let reaches = |k: u64| k > 0 && pass_at_k_exact(model, k) >= target;

    // Closed-form inverse of the large-k law as the starting point.
    let ln_rel_loss = ((model.ceiling - target) / model.ceiling).ln();
    let seed = ((model.ln_tail_prefactor() - ln_rel_loss) / model.beta).exp();
    const CAP: u64 = 1 << 62;
    let seed = if seed.is_finite() {
        seed.clamp(1.0, CAP as f64) as u64
    } else {
        CAP
    };

    let (mut lo, mut hi);
    if reaches(seed) {
        hi = seed;
        let mut step = 1u64;
        lo = seed.saturating_sub(step);
        while reaches(lo) {
            hi = lo;
            step = step.saturating_mul(2);
            lo = lo.saturating_sub(step);
        }
    } else {
        lo = seed;
        let mut step = 1u64;
        hi = seed.saturating_add(step);
        while !reaches(hi) {
            if hi >= CAP {
                return Err(Error::Infeasible(format!(
                    "target coverage {target} needs more than 2^62 attempts"
                )));
            }
            lo = hi;
            step = step.saturating_mul(2);
            hi = hi.saturating_add(step).min(CAP);
        }
    }
    // Invariant: !reaches(lo), reaches(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// FLOPS needed to reach `target` coverage with whole completions.
pub fn cost_for_target_coverage(
    model: &BetaFailureModel,
    params: &CostParams,
    target: f64,
) -> Result<f64> {
    total_cost(params, k_for_target_coverage(model, target)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(a: f64, al: f64, be: f64) -> BetaFailureModel {
        BetaFailureModel::new(a, al, be).unwrap()
    }

    fn params(np: u64, nd: u64, f: f64) -> CostParams {
        CostParams::new(np, nd, f).unwrap()
    }

    #[test]
    fn total_cost_examples() {
        assert_eq!(total_cost(&params(100, 50, 1.0), 10).unwrap(), 600.0);
        let one = total_cost(&params(7, 3, 1.0), 11).unwrap();
        assert_eq!(total_cost(&params(7, 3, 2.0), 11).unwrap(), 2.0 * one);
        assert_eq!(
            total_cost(&params(512, 256, 8e9), 100).unwrap(),
            512.0 * 8e9 + 256.0 * 8e9 * 100.0
        );
        assert!(total_cost(&params(1, 1, 1.0), 0).is_err());
        assert!(CostParams::new(0, 1, 1.0).is_err());
        assert!(CostParams::new(1, 1, -1.0).is_err());
    }

    #[test]
    fn affine_step_is_exact() {
        let p = params(512, 256, 8e9);
        for k in [1u64, 2, 99, 10_000] {
            let d = total_cost(&p, k + 1).unwrap() - total_cost(&p, k).unwrap();
            assert_eq!(d, 256.0 * 8e9);
        }
    }

    #[test]
    fn exact_mode_at_single_completion() {
        let m = model(0.9, 5.0, 0.35);
        let p = params(100, 50, 3.0);
        let budget = total_cost(&p, 1).unwrap();
        let c = coverage_of_cost(&m, &p, budget, CostMode::Exact).unwrap();
        assert!((c - 0.9 * 0.35 / 5.35).abs() < 1e-14);
        let err = coverage_of_cost(&m, &p, budget * 0.99, CostMode::Exact).unwrap_err();
        assert!(err.to_string().contains("minimum feasible budget"));
    }

    #[test]
    fn modes_agree_at_large_k() {
        let m = model(0.95, 5.0, 0.35);
        let p = params(300, 120, 2.0);
        let budget = total_cost(&p, 10_000).unwrap();
        let a = coverage_of_cost(&m, &p, budget, CostMode::Asymptotic).unwrap();
        let e = coverage_of_cost(&m, &p, budget, CostMode::Exact).unwrap();
        assert!((a - e).abs() <= 1e-3, "{a} vs {e}");
    }

    #[test]
    fn loss_power_law_in_budget() {
        let m = model(0.9, 5.0, 0.35);
        let p = params(100, 50, 1.0);
        let np = 100.0;
        let x = 1000.0;
        let l1 = loss_of_cost(&m, &p, (np + 50.0 * x) * 1.0, CostMode::Asymptotic).unwrap();
        let l2 = loss_of_cost(&m, &p, (np + 50.0 * 2.0 * x) * 1.0, CostMode::Asymptotic).unwrap();
        assert!((l2 / l1 - 2f64.powf(-0.35)).abs() < 1e-12);
        let l10 = loss_of_cost(&m, &p, (np + 50.0 * 10.0 * x) * 1.0, CostMode::Asymptotic).unwrap();
        assert!((l10 / l1 - 0.4467).abs() < 1e-4);
        // Finite-difference slope in log space.
        let h = 1e-4;
        let at = |x: f64| loss_of_cost(&m, &p, np + 50.0 * x, CostMode::Asymptotic).unwrap().ln();
        let slope = (at(x * (1.0 + h)) - at(x)) / (1.0 + h).ln();
        assert!((slope + 0.35).abs() < 1e-9, "slope {slope}");
    }

    #[test]
    fn coverage_approaches_ceiling() {
        let m = model(0.8, 2.0, 0.5);
        let p = params(10, 10, 1.0);
        let c = coverage_of_cost(&m, &p, 1e30, CostMode::Asymptotic).unwrap();
        assert!((c - 0.8).abs() < 1e-9);
    }

    #[test]
    fn uniform_targets() {
        let m = model(1.0, 1.0, 1.0);
        assert_eq!(k_for_target_coverage(&m, 0.9).unwrap(), 9);
        assert_eq!(k_for_target_coverage(&m, 0.99).unwrap(), 99);
        assert_eq!(
            cost_for_target_coverage(&m, &params(100, 50, 1.0), 0.9).unwrap(),
            550.0
        );
        assert!(matches!(k_for_target_coverage(&m, 1.0), Err(Error::Infeasible(_))));
        assert!(k_for_target_coverage(&m, 0.0).is_err());
    }

    #[test]
    fn target_just_above_pass_at_one() {
        let m = model(0.9, 5.0, 0.35);
        let t = pass_at_k_exact(&m, 1) * (1.0 + 1e-9);
        assert_eq!(k_for_target_coverage(&m, t).unwrap(), 2);
        let p = params(100, 50, 1.0);
        assert_eq!(
            cost_for_target_coverage(&m, &p, t).unwrap(),
            total_cost(&p, 2).unwrap()
        );
    }

    #[test]
    fn paper_like_target_matches_scan() {
        let m = model(0.9, 5.0, 0.35);
        let scan = (1u64..).find(|&k| pass_at_k_exact(&m, k) >= 0.8).unwrap();
        assert_eq!(k_for_target_coverage(&m, 0.8).unwrap(), scan);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn complement_in_asymptotic_mode(
            a in 0.05f64..=1.0, al in 0.1f64..20.0, be in 0.1f64..2.0,
            np in 1u64..10_000, nd in 1u64..10_000, f in 1e-3f64..1e12, x in 1.0f64..1e9,
        ) {
            let m = model(a, al, be);
            let p = params(np, nd, f);
            let budget = f * (np as f64 + nd as f64 * x) * (1.0 + 1e-12);
            let c = coverage_of_cost(&m, &p, budget, CostMode::Asymptotic).unwrap();
            let l = loss_of_cost(&m, &p, budget, CostMode::Asymptotic).unwrap();
            prop_assert!((c + l - a).abs() <= 1e-12);
        }

        #[test]
        fn inversion_is_tight(al in 0.1f64..20.0, be in 0.2f64..2.0, frac in 0.05f64..0.95) {
            let m = model(1.0, al, be);
            let t = frac * pass_at_k_exact(&m, 5000);
            let k = k_for_target_coverage(&m, t).unwrap();
            prop_assert!(pass_at_k_exact(&m, k) >= t);
            prop_assert!(k == 1 || pass_at_k_exact(&m, k - 1) < t);
        }

        #[test]
        fn cost_at_least_one_completion(al in 0.1f64..20.0, be in 0.1f64..2.0, frac in 0.01f64..0.99) {
            let m = model(0.9, al, be);
            let p = params(64, 32, 1.5);
            let c = cost_for_target_coverage(&m, &p, frac * 0.9).unwrap();
            prop_assert!(c >= p.min_budget());
        }

        #[test]
        fn exact_coverage_monotone_in_budget(b1 in 1.0f64..1e6, b2 in 1.0f64..1e6) {
            let m = model(0.9, 3.0, 0.5);
            let p = params(10, 5, 1.0);
            let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
            let base = p.min_budget();
            for mode in [CostMode::Exact, CostMode::Asymptotic] {
                let a = coverage_of_cost(&m, &p, base + lo, mode).unwrap();
                let b = coverage_of_cost(&m, &p, base + hi, mode).unwrap();
                prop_assert!(b >= a);
            }
        }
    }
}
