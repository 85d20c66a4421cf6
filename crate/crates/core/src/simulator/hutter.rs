//! Expected single-feature error of a perfect memorizer over Zipf features.
//!
//! With feature frequencies `θ_i = i^{−s}/ζ(s)`, `s = 1 + α`, the error after
//! `n` samples is `E_n = Σ_i θ_i (1 − θ_i)^n`. The first `M` terms are summed
//! directly. For `i > M` the binomial expansion of `(1 − θ_i)^n` turns the tail
//! into
//!
//! ```text
//! Σ_j (−1)^j C(n, j) ζ(s)^{−(j+1)} ζ(s(j+1), M+1)
//! ```
//!
//! which converges geometrically once `n θ_{M+1}` is small.

use crate::error::{Error, Result};
use crate::specfun::{hurwitz_zeta, ln_gamma, riemann_zeta};

/// `M` is chosen so that `n θ_{M+1}` is at most this.
const AUTO_TAIL_RATIO: f64 = 0.1;
/// A caller-supplied `M` must keep `n θ_{M+1}` below this.
const MAX_TAIL_RATIO: f64 = 0.5;
const MAX_HEAD_TERMS: u64 = 200_000_000;
const MAX_SERIES_TERMS: u64 = 200;

/// `E_n` for Zipf exponent `1 + alpha`. `head_terms` overrides the number of
/// directly summed terms.
pub fn hutter_error(n: u64, alpha: f64, head_terms: Option<u64>) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::domain(format!(
            "Zipf weights i^-(1+alpha) are not normalizable for alpha = {alpha}"
        )));
    }
    let s = 1.0 + alpha;
    let z = riemann_zeta(s)?;
    let nf = n as f64;
    let theta = |i: u64| (i as f64).powf(-s) / z;

    let m = match head_terms {
        Some(m) => {
            if nf * theta(m + 1) > MAX_TAIL_RATIO {
                return Err(Error::domain(format!(
                    "{m} head terms leave n*theta_(M+1) = {:.3} > {MAX_TAIL_RATIO}; the tail series would not converge reliably",
                    nf * theta(m + 1)
                )));
            }
            m
        }
        None => {
            let need = (nf / (AUTO_TAIL_RATIO * z)).powf(1.0 / s).ceil() as u64;
            need.saturating_sub(1)
        }
    };
    if m > MAX_HEAD_TERMS {
        return Err(Error::ResourceGuard(format!(
            "Hutter error at n={n}, alpha={alpha} needs {m} head terms"
        )));
    }

    let mut head = 0.0;
    for i in 1..=m {
        let t = theta(i);
        head += t * (nf * (-t).ln_1p()).exp();
    }

    let ln_z = z.ln();
    let ln_n_fact = ln_gamma(nf + 1.0)?;
    let mut tail = 0.0;
    let q = (m + 1) as f64;
    for j in 0..=n.min(MAX_SERIES_TERMS) {
        let jf = j as f64;
        let ln_choose = ln_n_fact - ln_gamma(jf + 1.0)? - ln_gamma(nf - jf + 1.0)?;
        let zeta_tail = hurwitz_zeta(s * (jf + 1.0), q)?;
        if zeta_tail == 0.0 {
            break;
        }
        let term = (ln_choose - (jf + 1.0) * ln_z + zeta_tail.ln()).exp();
        tail += if j % 2 == 0 { term } else { -term };
        if term <= 1e-18 * tail.abs() {
            break;
        }
    }
    Ok(head + tail)
}
