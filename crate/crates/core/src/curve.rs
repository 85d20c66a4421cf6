use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of observations any fit will accept.
pub const MIN_FIT_POINTS: usize = 4;

/// Ordered `(k, coverage)` observations of pass@k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve {
    points: Vec<(u64, f64)>,
    pub label: String,
}

impl CoverageCurve {
    /// Validates that `k` is positive and strictly increasing and that every
    /// coverage lies in `[0, 1]`.
    pub fn new(points: Vec<(u64, f64)>, label: impl Into<String>) -> Result<Self> {
        let mut prev = 0u64;
        for (i, &(k, c)) in points.iter().enumerate() {
            if k == 0 {
                return Err(Error::domain(format!("point {i}: k must be >= 1")));
            }
            if k <= prev {
                return Err(Error::domain(format!(
                    "point {i}: k must be strictly increasing ({k} after {prev})"
                )));
            }
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::domain(format!(
                    "point {i}: coverage {c} outside [0, 1]"
                )));
            }
            prev = k;
        }
        Ok(CoverageCurve {
            points,
            label: label.into(),
        })
    }

    /// Builds a curve by evaluating `f` at each `k`.
    pub fn from_fn(
        ks: &[u64],
        label: impl Into<String>,
        mut f: impl FnMut(u64) -> Result<f64>,
    ) -> Result<Self> {
        let points = ks
            .iter()
            .map(|&k| Ok((k, f(k)?)))
            .collect::<Result<Vec<_>>>()?;
        CoverageCurve::new(points, label)
    }

    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ks(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn coverages(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn max_coverage(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    pub(crate) fn require_fit_size(&self) -> Result<()> {
        if self.points.len() < MIN_FIT_POINTS {
            return Err(Error::domain(format!(
                "a fit needs at least {MIN_FIT_POINTS} points, curve has {}",
                self.points.len()
            )));
        }
        Ok(())
    }
}

/// `count` distinct integers spaced (approximately) evenly in log between `lo`
/// and `hi`, inclusive of both ends.
pub fn log_spaced_ks(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    assert!(lo >= 1 && hi >= lo, "log_spaced_ks needs 1 <= lo <= hi");
    if count <= 1 || lo == hi {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u64)
        .map(|k| k.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}

/// Powers of two `1, 2, 4, ..` up to and including `hi` (when `hi` is a power of two).
pub fn powers_of_two(hi: u64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |&k| k.checked_mul(2))
        .take_while(|&k| k <= hi)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unordered_and_out_of_range() {
        assert!(CoverageCurve::new(vec![(1, 0.1), (1, 0.2)], "").is_err());
        assert!(CoverageCurve::new(vec![(2, 0.1), (1, 0.2)], "").is_err());
        assert!(CoverageCurve::new(vec![(0, 0.1)], "").is_err());
        assert!(CoverageCurve::new(vec![(1, 1.2)], "").is_err());
        assert!(CoverageCurve::new(vec![(1, f64::NAN)], "").is_err());
        let c = CoverageCurve::new(vec![(1, 0.1), (5, 0.4)], "x").unwrap();
        assert_eq!(c.max_coverage(), 0.4);
        assert!(c.require_fit_size().is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(powers_of_two(4096).len(), 13);
        let g = log_spaced_ks(1, 10_000, 40);
        assert_eq!(g[0], 1);
        assert_eq!(*g.last().unwrap(), 10_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
