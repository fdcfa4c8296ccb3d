//! Monte Carlo oracle for the operator: `𝐏μ` is the law of
//! `ζ = η_τ (ξ₁ + … + ξ_τ)` with `P(τ = i) = αᵢ`, `η_i ~ φᵢ` and `ξⱼ` iid
//! from μ, all independent.
//!
//! Mixing laws are sampled from their exact quantile functions, not their
//! discretizations, so the comparison with the exact operator also sees the
//! discretization of φ.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collision::CollisionModel;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::par;

/// Draws per parallel block in [`empirical_apply`]. Fixed so the output
/// depends only on the seed and stream, never on the thread count.
pub const BLOCK_DRAWS: usize = 4096;

/// ChaCha8 stream keyed by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on the open interval (0, 1), 53 bits.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Independent child stream for block `b`, keyed by this stream's seed
    /// and id.
    fn block(&self, b: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(self.stream_id)), b)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inverse-CDF draw from a probability measure.
pub fn sample_measure(mu: &DiscreteMeasure, rng: &mut RngStream) -> f64 {
    mu.quantile_unchecked(rng.uniform())
}

/// One draw of ζ. Uses the retained, renormalized α's.
pub fn sample_zeta(model: &CollisionModel, mu: &DiscreteMeasure, rng: &mut RngStream) -> f64 {
    let comps = model.components();
    let u = rng.uniform();
    let mut acc = 0.0;
    let mut pick = &comps[comps.len() - 1];
    for c in comps {
        acc += c.alpha;
        if u < acc {
            pick = c;
            break;
        }
    }
    let eta = pick.phi.law.quantile(rng.uniform());
    let sum: f64 = (0..pick.index).map(|_| sample_measure(mu, rng)).sum();
    eta * sum
}

/// Empirical measure of `n_draws` independent ζ draws, each weight
/// `1/n_draws`. Blocks of [`BLOCK_DRAWS`] use their own child streams of
/// `rng`, which itself is not advanced.
pub fn empirical_apply(
    model: &CollisionModel,
    mu: &DiscreteMeasure,
    n_draws: usize,
    rng: &RngStream,
) -> Result<DiscreteMeasure> {
    if n_draws == 0 {
        return Err(Error::InvalidArgument("n_draws must be >= 1".into()));
    }
    let blocks = par::chunks(n_draws, n_draws.div_ceil(BLOCK_DRAWS));
    let draws = par::map_range(blocks.len(), |b| {
        let mut r = rng.block(b as u64);
        blocks[b].clone().map(|_| sample_zeta(model, mu, &mut r)).collect::<Vec<_>>()
    });
    let locs: Vec<f64> = draws.into_iter().flatten().collect();
    let w = vec![1.0 / n_draws as f64; n_draws];
    DiscreteMeasure::new(&locs, &w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::ModelSpec;
    use crate::measure::Law;
    use crate::metrics::wasserstein1;

    #[test]
    fn dirac_draws() {
        let mut r = RngStream::new(1, 0);
        assert!((0..100).all(|_| sample_measure(&DiscreteMeasure::dirac(2.5), &mut r) == 2.5));
    }

    #[test]
    fn bernoulli_mean_within_clt() {
        let mu = DiscreteMeasure::new(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let mut r = RngStream::new(7, 3);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_measure(&mu, &mut r)).sum::<f64>() / n as f64;
        // 3σ = 3 · 0.5 / √n ≈ 0.0047
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn determinism() {
        let draw = |seed, id| {
            let mut r = RngStream::new(seed, id);
            (0..10).map(|_| r.uniform()).collect::<Vec<_>>()
        };
        assert_eq!(draw(42, 0), draw(42, 0));
        assert_ne!(draw(42, 0), draw(42, 1));
        assert_ne!(draw(42, 0), draw(43, 0));
        assert!(draw(42, 0).iter().all(|&u| u > 0.0 && u < 1.0));
    }

    #[test]
    fn zeta_trivial_model() {
        let m = CollisionModel::new(ModelSpec::single(2, Law::atoms(DiscreteMeasure::dirac(0.5)))).unwrap();
        let mut r = RngStream::new(0, 0);
        assert!((0..50).all(|_| sample_zeta(&m, &DiscreteMeasure::dirac(1.0), &mut r) == 1.0));
    }

    #[test]
    fn single_draw_is_unit_atom() {
        let m = CollisionModel::new(ModelSpec::tjon_wu(64)).unwrap();
        let e = empirical_apply(&m, &DiscreteMeasure::dirac(1.0), 1, &RngStream::new(5, 0)).unwrap();
        assert_eq!((e.len(), e.mass()), (1, 1.0));
    }

    #[test]
    fn tjon_wu_matches_exact_apply() {
        let m = CollisionModel::new(ModelSpec::tjon_wu(512)).unwrap();
        let mu = DiscreteMeasure::dirac(1.0);
        let exact = m.apply(&mu).unwrap();
        let a = empirical_apply(&m, &mu, 100_000, &RngStream::new(11, 0)).unwrap();
        let b = empirical_apply(&m, &mu, 100_000, &RngStream::new(11, 1)).unwrap();
        assert!(wasserstein1(&a, &exact.result) <= 0.02);
        let two = wasserstein1(&a, &b);
        assert!(two > 0.0 && two <= 0.03, "{two}");
    }
}
