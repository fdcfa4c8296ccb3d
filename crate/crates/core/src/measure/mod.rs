//! Finitely-atomic nonnegative measures on `[0, ∞)` and their exact algebra.
//!
//! A [`DiscreteMeasure`] is a sorted list of atoms. Convolution and the
//! multiplicative product are computed exactly on atoms; when the atom count
//! must be capped, [`coarsen`] (barycenter merges) or the dyadic grid
//! projection in [`grid`] replace the measure by a smaller one with the same
//! mass and first moment and report a bound on the W1 distance moved.

mod coarsen;
pub mod grid;
pub mod io;
mod law;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use coarsen::{coarsen, coarsen_with, CoarsenReceipt, Coarsening};
pub use grid::GridConfig;
pub use law::{discretize, Law, MixingLaw};

/// Default cap on the number of atoms an exact product may materialize.
pub const HARD_ATOM_CAP: usize = 1 << 20;

/// Relative distance under which two locations are treated as one atom.
pub const MERGE_RELATIVE: f64 = 1e-14;

/// Finitely-atomic measure on `[0, ∞)`.
///
/// Locations are strictly increasing, weights strictly positive. The
/// cumulative weights are kept alongside for `O(log n)` CDF and quantile
/// queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct DiscreteMeasure {
    locs: Vec<f64>,
    weights: Vec<f64>,
    cum: Vec<f64>,
}

impl PartialEq for DiscreteMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.locs == other.locs && self.weights == other.weights
    }
}

impl TryFrom<Vec<(f64, f64)>> for DiscreteMeasure {
    type Error = Error;

    fn try_from(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let (l, w): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
        DiscreteMeasure::new(&l, &w)
    }
}

impl From<DiscreteMeasure> for Vec<(f64, f64)> {
    fn from(m: DiscreteMeasure) -> Self {
        m.atoms().collect()
    }
}

/// Validating constructor. With `probability_tol = Some(tol)` the total mass
/// must lie in `[1 - tol, 1 + tol]`.
pub fn make_measure(locations: &[f64], weights: &[f64], probability_tol: Option<f64>) -> Result<DiscreteMeasure> {
    let m = DiscreteMeasure::new(locations, weights)?;
    if let Some(tol) = probability_tol {
        let mass = m.mass();
        if (mass - 1.0).abs() > tol {
            return Err(Error::MassOutOfTolerance { mass, tolerance: tol });
        }
    }
    Ok(m)
}

impl DiscreteMeasure {
    /// Builds a nonnegative measure: sorts, merges near-duplicate locations
    /// at their barycenter and drops zero weights.
    pub fn new(locations: &[f64], weights: &[f64]) -> Result<Self> {
        if locations.len() != weights.len() {
            return Err(Error::LengthMismatch { locations: locations.len(), weights: weights.len() });
        }
        for (&x, &w) in locations.iter().zip(weights) {
            if !x.is_finite() {
                return Err(Error::NonFinite(x));
            }
            if !w.is_finite() {
                return Err(Error::NonFinite(w));
            }
            if x < 0.0 {
                return Err(Error::NegativeLocation(x));
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight(w));
            }
        }
        let pairs: Vec<(f64, f64)> =
            locations.iter().copied().zip(weights.iter().copied()).filter(|&(_, w)| w > 0.0).collect();
        let m = Self::from_unsorted_pairs(pairs);
        if m.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(m)
    }

    /// Probability measure constructor with the given mass slack.
    pub fn probability(locations: &[f64], weights: &[f64], tol: f64) -> Result<Self> {
        make_measure(locations, weights, Some(tol))
    }

    pub fn dirac(x: f64) -> Self {
        assert!(x >= 0.0 && x.is_finite(), "dirac location must be finite and >= 0");
        Self::from_sorted_parts(vec![x], vec![1.0])
    }

    /// Trusted path for pairs produced internally (finite, nonnegative,
    /// positive weights). Sorts and merges.
    pub(crate) fn from_unsorted_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        Self::from_sorted_pairs(&pairs)
    }

    pub(crate) fn from_sorted_pairs(pairs: &[(f64, f64)]) -> Self {
        let mut locs: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        // running cluster: weight, first moment, member count
        let mut cw = 0.0;
        let mut cs = 0.0;
        let mut cn = 0usize;
        let mut anchor = f64::NAN;
        for &(x, w) in pairs {
            if w <= 0.0 {
                continue;
            }
            if cn > 0 && (x - anchor) <= MERGE_RELATIVE * x.max(anchor) {
                cw += w;
                cs += w * x;
                cn += 1;
                continue;
            }
            if cn > 0 {
                locs.push(cluster_location(cs, cw, cn, anchor));
                weights.push(cw);
            }
            anchor = x;
            cw = w;
            cs = w * x;
            cn = 1;
        }
        if cn > 0 {
            locs.push(cluster_location(cs, cw, cn, anchor));
            weights.push(cw);
        }
        Self::from_sorted_parts(locs, weights)
    }

    /// Caller guarantees strictly ascending locations and positive weights.
    pub(crate) fn from_sorted_parts(locs: Vec<f64>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(locs.len(), weights.len());
        debug_assert!(locs.windows(2).all(|w| w[0] < w[1]), "locations not ascending");
        // compensated, so the total mass is accurate to one rounding; the
        // max keeps the array monotone for binary search
        let mut cum = Vec::with_capacity(weights.len());
        let (mut acc, mut comp, mut prev) = (0.0f64, 0.0f64, 0.0f64);
        for &w in &weights {
            let y = w - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            prev = prev.max(acc);
            cum.push(prev);
        }
        Self { locs, weights, cum }
    }

    pub fn len(&self) -> usize {
        self.locs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locs.is_empty()
    }

    pub fn locations(&self) -> &[f64] {
        &self.locs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.locs.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn mass(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    pub fn min_location(&self) -> f64 {
        self.locs[0]
    }

    pub fn max_location(&self) -> f64 {
        self.locs[self.locs.len() - 1]
    }

    /// `Σ wₖ xₖ^r`, with `0^0 = 1` so that `moment(0)` is the mass.
    pub fn moment(&self, r: f64) -> f64 {
        if r == 0.0 {
            return self.mass();
        }
        if r == 1.0 {
            return self.atoms().map(|(x, w)| w * x).sum();
        }
        self.atoms().map(|(x, w)| w * x.powf(r)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0) / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let mass = self.mass();
        let mean = self.mean();
        self.atoms().map(|(x, w)| w * (x - mean) * (x - mean)).sum::<f64>() / mass
    }

    /// Weight sitting exactly at location `x` (0 if there is no atom there).
    pub fn weight_at(&self, x: f64) -> f64 {
        match self.locs.binary_search_by(|l| l.total_cmp(&x)) {
            Ok(k) => self.weights[k],
            Err(_) => 0.0,
        }
    }

    /// Right-continuous CDF: total weight on `[0, x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.locs.partition_point(|&l| l <= x);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// Generalized inverse `inf{x : F(x) ≥ p}` of the normalized CDF.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::POutOfRange(p));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        let target = p * self.mass();
        let k = self.cum.partition_point(|&c| c < target);
        self.locs[k.min(self.locs.len() - 1)]
    }

    pub fn median(&self) -> f64 {
        self.quantile_unchecked(0.5)
    }

    /// First moment carried by atoms at or above `m`.
    pub fn tail_first_moment(&self, m: f64) -> f64 {
        let k = self.locs.partition_point(|&l| l < m);
        self.atoms().skip(k).map(|(x, w)| w * x).sum()
    }

    /// `Σ wₖ ψ(xₖ)` for a test function.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.atoms().map(|(x, w)| w * f(x)).sum()
    }

    /// Multiplies every weight by `c > 0`.
    pub fn scaled_weights(&self, c: f64) -> Self {
        assert!(c > 0.0 && c.is_finite());
        Self::from_sorted_parts(self.locs.clone(), self.weights.iter().map(|w| w * c).collect())
    }

    /// Rescales weights so the total mass is exactly representable as 1
    /// up to one rounding.
    pub fn normalized(&self) -> Self {
        self.scaled_weights(1.0 / self.mass())
    }
}

fn cluster_location(s: f64, w: f64, members: usize, anchor: f64) -> f64 {
    if members == 1 {
        return anchor;
    }
    let b = s / w;
    if b.is_finite() && b >= 0.0 {
        b
    } else {
        anchor
    }
}

/// Weighted union `Σ cₖ μₖ` of measures, merged exactly (no coarsening).
pub fn mixture(parts: &[(f64, &DiscreteMeasure)]) -> DiscreteMeasure {
    let mut pairs = Vec::with_capacity(parts.iter().map(|(_, m)| m.len()).sum());
    for &(c, m) in parts {
        if c > 0.0 {
            pairs.extend(m.atoms().map(|(x, w)| (x, c * w)));
        }
    }
    DiscreteMeasure::from_unsorted_pairs(pairs)
}

/// Exact convolution `μ * ν`.
pub fn convolve(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    convolve_capped(mu, nu, HARD_ATOM_CAP)
}

pub fn convolve_capped(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cap: usize) -> Result<DiscreteMeasure> {
    pairwise(mu, nu, cap, |x, y| x + y)
}

/// Exact multiplicative product `φ ∘ μ`: atoms at `z·x` with weight `φ(z)μ(x)`.
pub fn scale_product(phi: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    scale_product_capped(phi, mu, HARD_ATOM_CAP)
}

pub fn scale_product_capped(phi: &DiscreteMeasure, mu: &DiscreteMeasure, cap: usize) -> Result<DiscreteMeasure> {
    pairwise(phi, mu, cap, |z, x| z * x)
}

fn pairwise<F: Fn(f64, f64) -> f64>(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    cap: usize,
    op: F,
) -> Result<DiscreteMeasure> {
    let atoms = a.len().saturating_mul(b.len());
    if atoms > cap {
        return Err(Error::AtomOverflow { atoms, cap });
    }
    let mut pairs = Vec::with_capacity(atoms);
    for (x, wx) in a.atoms() {
        for (y, wy) in b.atoms() {
            pairs.push((op(x, y), wx * wy));
        }
    }
    Ok(DiscreteMeasure::from_unsorted_pairs(pairs))
}

/// `i`-fold convolution power with coarsening after every fold.
///
/// Returns the approximation and an upper bound on its W1 distance to the
/// exact power. Coarsening error passes through later folds unamplified,
/// since `W1(μ * ρ, μ * ρ') ≤ W1(ρ, ρ')`, so the per-fold bounds add.
pub fn convolve_power(mu: &DiscreteMeasure, i: usize, budget: usize) -> Result<(DiscreteMeasure, f64)> {
    convolve_power_with(mu, i, budget, &Coarsening::Barycenter, HARD_ATOM_CAP)
}

pub fn convolve_power_with(
    mu: &DiscreteMeasure,
    i: usize,
    budget: usize,
    strategy: &Coarsening,
    cap: usize,
) -> Result<(DiscreteMeasure, f64)> {
    if i == 0 {
        return Err(Error::InvalidArgument("convolution power must be >= 1".into()));
    }
    let mut acc = mu.clone();
    let mut bound = 0.0;
    for _ in 1..i {
        let receipt = grid::convolve_coarse(mu, &acc, budget, strategy, cap)?;
        bound += receipt.w1_error_bound;
        acc = receipt.result;
    }
    Ok((acc, bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(l: &[f64], w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(l, w).unwrap()
    }

    #[test]
    fn construction_sorts_and_merges() {
        let a = make_measure(&[1.0, 0.0], &[0.5, 0.5], Some(1e-12)).unwrap();
        assert_eq!(a.locations(), &[0.0, 1.0]);
        assert_eq!(a.weights(), &[0.5, 0.5]);
        let b = make_measure(&[2.0, 2.0], &[0.3, 0.7], Some(1e-12)).unwrap();
        assert_eq!(b.locations(), &[2.0]);
        assert!((b.weights()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(make_measure(&[1.0], &[-0.1], None).unwrap_err(), Error::NegativeWeight(-0.1));
        assert_eq!(make_measure(&[-1.0], &[1.0], None).unwrap_err(), Error::NegativeLocation(-1.0));
        assert_eq!(make_measure(&[], &[], None).unwrap_err(), Error::EmptyMeasure);
        assert_eq!(make_measure(&[1.0], &[0.0], None).unwrap_err(), Error::EmptyMeasure);
        assert!(matches!(make_measure(&[1.0], &[0.5], Some(1e-9)), Err(Error::MassOutOfTolerance { .. })));
        assert!(matches!(make_measure(&[1.0, 2.0], &[0.5], None), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn zero_weights_dropped_and_near_duplicates_merged() {
        let a = m(&[0.0, 1.0, f64::from_bits(1f64.to_bits() + 1), 3.0], &[0.25, 0.25, 0.25, 0.0]);
        assert_eq!(a.len(), 2);
        assert_eq!(a.weights()[1], 0.5);
        assert!((a.locations()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moments() {
        assert_eq!(DiscreteMeasure::dirac(1.0).moment(1.0), 1.0);
        let a = m(&[0.0, 2.0], &[0.5, 0.5]);
        assert!((a.moment(1.5) - 0.5 * 2f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(a.moment(0.0), 1.0);
        assert_eq!(DiscreteMeasure::dirac(0.0).moment(0.0), 1.0);
    }

    #[test]
    fn convolution_examples() {
        let b = m(&[0.0, 1.0], &[0.5, 0.5]);
        let c = convolve(&b, &b).unwrap();
        assert_eq!(c.locations(), &[0.0, 1.0, 2.0]);
        assert_eq!(c.weights(), &[0.25, 0.5, 0.25]);
        let d = convolve(&DiscreteMeasure::dirac(0.3), &DiscreteMeasure::dirac(1.2)).unwrap();
        assert_eq!(d.locations(), &[0.3 + 1.2]);
    }

    #[test]
    fn convolution_overflow() {
        let a = m(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]);
        assert_eq!(convolve_capped(&a, &a, 8).unwrap_err(), Error::AtomOverflow { atoms: 9, cap: 8 });
    }

    #[test]
    fn scale_product_examples() {
        let phi = m(&[0.0, 1.0], &[0.5, 0.5]);
        let r = scale_product(&phi, &DiscreteMeasure::dirac(2.0)).unwrap();
        assert_eq!(r.locations(), &[0.0, 2.0]);
        assert_eq!(r.weights(), &[0.5, 0.5]);
        let mu = m(&[0.2, 0.7, 3.0], &[0.2, 0.5, 0.3]);
        assert_eq!(scale_product(&DiscreteMeasure::dirac(1.0), &mu).unwrap(), mu);
    }

    #[test]
    fn convolve_power_base_cases() {
        let b = m(&[0.0, 1.0], &[0.5, 0.5]);
        let (p1, e1) = convolve_power(&b, 1, 1).unwrap();
        assert_eq!(p1, b);
        assert_eq!(e1, 0.0);
        let (p2, e2) = convolve_power(&b, 2, 3).unwrap();
        assert_eq!(p2.locations(), &[0.0, 1.0, 2.0]);
        assert_eq!(p2.weights(), &[0.25, 0.5, 0.25]);
        assert_eq!(e2, 0.0);
    }

    #[test]
    fn cdf_and_quantile() {
        let b = m(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(b.cdf(0.0), 0.5);
        assert_eq!(b.cdf(-1.0), 0.0);
        assert_eq!(b.cdf(0.99), 0.5);
        assert_eq!(b.cdf(1.0), 1.0);
        assert_eq!(b.quantile(0.75).unwrap(), 1.0);
        assert_eq!(b.quantile(0.5).unwrap(), 0.0);
        assert_eq!(b.quantile(1.5).unwrap_err(), Error::POutOfRange(1.5));
        let d = DiscreteMeasure::dirac(2.5);
        for p in [1e-9, 0.3, 1.0] {
            assert_eq!(d.quantile(p).unwrap(), 2.5);
        }
    }

    #[test]
    fn tail_moment() {
        assert_eq!(DiscreteMeasure::dirac(0.5).tail_first_moment(1.0), 0.0);
        assert_eq!(DiscreteMeasure::dirac(2.0).tail_first_moment(1.0), 2.0);
        let a = m(&[0.0, 1.0, 2.0], &[0.25, 0.5, 0.25]);
        assert_eq!(a.tail_first_moment(2.0), 0.5);
    }

    #[test]
    fn serde_pairs() {
        let a = m(&[0.1, 3.0], &[0.25, 0.75]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[0.1,0.25],[3.0,0.75]]");
        let b: DiscreteMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<DiscreteMeasure>("[[1.0,-1.0]]").is_err());
    }
}
