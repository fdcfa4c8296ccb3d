use serde::{Deserialize, Serialize};

use super::DiscreteMeasure;
use crate::error::{Error, Result};

/// A probability law on `[0, ∞)`: atomic, or one of the continuous families
/// with closed-form moments and quantiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Law {
    Atoms { measure: DiscreteMeasure },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
}

impl Law {
    pub fn atoms(measure: DiscreteMeasure) -> Self {
        Law::Atoms { measure }
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi <= lo {
            return Err(Error::InvalidArgument(format!("uniform({lo}, {hi}) needs 0 <= lo < hi")));
        }
        Ok(Law::Uniform { lo, hi })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidArgument(format!("exponential rate {rate} must be > 0")));
        }
        Ok(Law::Exponential { rate })
    }

    /// Exact `∫ x^r law(dx)`.
    pub fn moment(&self, r: f64) -> f64 {
        match self {
            Law::Atoms { measure } => measure.moment(r),
            Law::Uniform { lo, hi } => {
                if r == 0.0 {
                    1.0
                } else {
                    (hi.powf(r + 1.0) - lo.powf(r + 1.0)) / ((r + 1.0) * (hi - lo))
                }
            }
            Law::Exponential { rate } => libm::tgamma(r + 1.0) / rate.powf(r),
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0)
    }

    /// Quantile function; for atoms the generalized inverse.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            Law::Atoms { measure } => measure.quantile_unchecked(p),
            Law::Uniform { lo, hi } => lo + (hi - lo) * p,
            Law::Exponential { rate } => -(-p).ln_1p() / rate,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Law::Atoms { .. })
    }
}

/// Redistribution law `φᵢ` for collisions of `index` particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingLaw {
    pub law: Law,
    pub index: usize,
}

impl MixingLaw {
    pub fn new(law: Law, index: usize) -> Self {
        Self { law, index }
    }

    /// The mean every mixing law for `index` must have.
    pub fn target_mean(&self) -> f64 {
        1.0 / self.index as f64
    }
}

/// Discretizes a law with `n` quantile midpoints.
///
/// Atom `k` sits at `quantile((k + ½)/n)` with weight `1/n`; the last atom is
/// then shifted so the first moment equals the law's exact mean. Atomic
/// laws are returned unchanged.
pub fn discretize(law: &Law, n: usize) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument("discretization needs n >= 1".into()));
    }
    if let Law::Atoms { measure } = law {
        return Ok(measure.clone());
    }
    let w = 1.0 / n as f64;
    let mut locs: Vec<f64> = (0..n).map(|k| law.quantile((k as f64 + 0.5) * w)).collect();
    let exact = law.mean();
    // two passes absorb the rounding left by the first shift
    for _ in 0..2 {
        let current: f64 = locs.iter().map(|x| x * w).sum();
        let last = locs.len() - 1;
        locs[last] = (locs[last] + (exact - current) * n as f64).max(0.0);
    }
    let weights = vec![w; n];
    DiscreteMeasure::new(&locs, &weights)
}
