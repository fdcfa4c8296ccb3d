//! Projection of atomic measures onto a fixed dyadic grid.
//!
//! The grid at resolution `bits` consists of `0` and every double `x ≥ floor`
//! whose mantissa is zero below its top `bits` bits, i.e. `2^bits` points per
//! octave. Grids at different resolutions are nested, and because the grid
//! does not depend on the measure, successive iterates of an operator land
//! on the same points.
//!
//! An atom at `x` strictly between grid neighbours `a < b` is split into
//! weights `w(b−x)/(b−a)` at `a` and `w(x−a)/(b−a)` at `b`. This keeps mass
//! and first moment exact. The transport cost of the split is
//! `2w(x−a)(b−x)/(b−a)`, which bounds the W1 distance moved. Projection is
//! linear in the measure and projecting twice onto nested grids equals
//! projecting once onto the coarser one, so products can be streamed into a
//! fine grid and reduced afterwards without materializing all pairs.

use serde::{Deserialize, Serialize};

use super::coarsen::{coarsen, CoarsenReceipt, Coarsening};
use super::{DiscreteMeasure, HARD_ATOM_CAP};
use crate::error::{Error, Result};
use crate::par;

const MANTISSA_BITS: u32 = 52;
const STREAM_CHUNKS: usize = 8;
const MAX_DENSE_CELLS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Smallest positive grid point is `2^floor_exponent`; atoms below it
    /// are split between `0` and the floor.
    pub floor_exponent: i32,
    /// Resolution products are streamed into before reduction.
    pub fine_bits: u32,
    /// Atoms in the upper tail carrying at most this fraction of the first
    /// moment are merged into their barycenter before reduction.
    pub tail_fraction: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { floor_exponent: -12, fine_bits: 12, tail_fraction: 1e-12 }
    }
}

impl GridConfig {
    pub fn floor(&self) -> f64 {
        2f64.powi(self.floor_exponent)
    }
}

#[inline]
fn key(x: f64, bits: u32) -> u64 {
    x.to_bits() >> (MANTISSA_BITS - bits)
}

#[inline]
fn point(k: u64, bits: u32) -> f64 {
    f64::from_bits(k << (MANTISSA_BITS - bits))
}

/// Grid neighbours `(a, b)` of `x > 0` with `a ≤ x < b`.
#[inline]
fn neighbours(x: f64, bits: u32, floor: f64) -> (f64, f64) {
    if x < floor {
        (0.0, floor)
    } else {
        let k = key(x, bits);
        (point(k, bits), point(k + 1, bits))
    }
}

/// True when `x` is a grid point at this resolution.
pub fn on_grid(x: f64, bits: u32, floor: f64) -> bool {
    x == 0.0 || (x >= floor && point(key(x, bits), bits) == x)
}

/// Appends `(x, w)` to an ascending atom list, adding into one of the last
/// two entries when the location is already present.
#[inline]
fn push_sorted(out: &mut Vec<(f64, f64)>, x: f64, w: f64) {
    let n = out.len();
    if n > 0 && out[n - 1].0 == x {
        out[n - 1].1 += w;
    } else if n > 1 && out[n - 2].0 == x {
        out[n - 2].1 += w;
    } else {
        debug_assert!(n == 0 || out[n - 1].0 < x);
        out.push((x, w));
    }
}

/// Projects ascending atoms onto the grid; returns atoms and split cost.
fn project_sorted(atoms: &[(f64, f64)], bits: u32, floor: f64) -> (Vec<(f64, f64)>, f64) {
    let mut out = Vec::with_capacity(atoms.len());
    let mut bound = 0.0;
    for &(x, w) in atoms {
        if on_grid(x, bits, floor) {
            push_sorted(&mut out, x, w);
            continue;
        }
        let (a, b) = neighbours(x, bits, floor);
        let t = (x - a) / (b - a);
        push_sorted(&mut out, a, w * (1.0 - t));
        push_sorted(&mut out, b, w * t);
        bound += 2.0 * w * (x - a) * (b - x) / (b - a);
    }
    out.retain(|&(_, w)| w > 0.0);
    (out, bound)
}

/// Merges the light upper tail into its barycenter and re-splits that onto
/// the grid. Input atoms must already be on the grid at `bits`.
fn merge_tail(atoms: Vec<(f64, f64)>, bits: u32, cfg: &GridConfig) -> (Vec<(f64, f64)>, f64) {
    let total: f64 = atoms.iter().map(|&(x, w)| w * x).sum();
    if atoms.len() < 3 || total <= 0.0 {
        return (atoms, 0.0);
    }
    let limit = cfg.tail_fraction * total;
    let mut acc = 0.0;
    let mut cut = atoms.len();
    while cut > 1 {
        let (x, w) = atoms[cut - 1];
        if acc + w * x > limit {
            break;
        }
        acc += w * x;
        cut -= 1;
    }
    if atoms.len() - cut < 2 {
        return (atoms, 0.0);
    }
    let tail = &atoms[cut..];
    let tw: f64 = tail.iter().map(|a| a.1).sum();
    let ts: f64 = tail.iter().map(|a| a.0 * a.1).sum();
    let b = (ts / tw).clamp(tail[0].0, tail[tail.len() - 1].0);
    let mut bound: f64 = tail.iter().map(|&(x, w)| w * (x - b).abs()).sum();
    let mut out = atoms[..cut].to_vec();
    let (split, cost) = project_sorted(&[(b, tw)], bits, cfg.floor());
    bound += cost;
    for (x, w) in split {
        push_sorted(&mut out, x, w);
    }
    (out, bound)
}

/// Tail merge and resolution reduction of atoms that sit on the grid at
/// `bits`, down to at most `budget` atoms.
///
/// The reported bound is the smaller of the summed split costs and the W1
/// distance between input and output evaluated directly, padded by the
/// worst-case rounding of that evaluation. Splits of neighbouring atoms
/// move mass in opposite directions, so the direct distance is usually far
/// below the sum.
fn reduce(atoms: Vec<(f64, f64)>, mut bits: u32, budget: usize, cfg: &GridConfig) -> CoarsenReceipt {
    let floor = cfg.floor();
    let before = DiscreteMeasure::from_sorted_pairs(&atoms);
    let (mut atoms, mut bound) = if atoms.len() > budget { merge_tail(atoms, bits, cfg) } else { (atoms, 0.0) };
    while atoms.len() > budget && bits > 0 {
        bits -= 1;
        let (next, cost) = project_sorted(&atoms, bits, floor);
        atoms = next;
        bound += cost;
    }
    let mut result = DiscreteMeasure::from_sorted_pairs(&atoms);
    if result.len() > budget {
        let r = coarsen(&result, budget);
        result = r.result;
        bound += r.w1_error_bound;
    }
    let direct = direct_w1_bound(&before, &result);
    CoarsenReceipt { result, w1_error_bound: bound.min(direct) }
}

/// `W1(a, b)` plus the rounding slack of computing it from running sums.
fn direct_w1_bound(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    let n = (a.len() + b.len()) as f64;
    let span = a.max_location().max(b.max_location());
    crate::metrics::wasserstein1(a, b) + 2.0 * n * f64::EPSILON * span * a.mass().max(b.mass())
}

/// Grid coarsening of a materialized measure to at most `budget` atoms.
pub fn project(mu: &DiscreteMeasure, budget: usize, cfg: &GridConfig) -> CoarsenReceipt {
    let budget = budget.max(1);
    if mu.len() <= budget {
        return CoarsenReceipt::exact(mu.clone());
    }
    let pairs: Vec<(f64, f64)> = mu.atoms().collect();
    let bits = fine_bits_for(mu.max_location(), cfg);
    let (atoms, cost) = project_sorted(&pairs, bits, cfg.floor());
    let mut r = reduce(atoms, bits, budget, cfg);
    r.w1_error_bound = (r.w1_error_bound + cost).min(direct_w1_bound(mu, &r.result));
    r
}

/// Finest resolution whose dense cell range up to `xmax` stays bounded.
fn fine_bits_for(xmax: f64, cfg: &GridConfig) -> u32 {
    let floor = cfg.floor();
    let mut bits = cfg.fine_bits.min(MANTISSA_BITS);
    if xmax <= floor {
        return bits;
    }
    while bits > 0 && (key(xmax, bits) - key(floor, bits)) as usize + 3 > MAX_DENSE_CELLS {
        bits -= 1;
    }
    bits
}

/// Dense accumulator over grid cells `0, floor, …, xmax⁺`.
struct Dense {
    bits: u32,
    floor: f64,
    base: u64,
    w: Vec<f64>,
    bound: f64,
}

impl Dense {
    fn new(bits: u32, floor: f64, xmax: f64) -> Self {
        let base = key(floor, bits);
        let top = if xmax < floor { base } else { key(xmax, bits) };
        let cells = (top - base) as usize + 3;
        Self { bits, floor, base, w: vec![0.0; cells], bound: 0.0 }
    }

    #[inline]
    fn deposit(&mut self, x: f64, w: f64) {
        if x == 0.0 {
            self.w[0] += w;
        } else if x < self.floor {
            let t = x / self.floor;
            self.w[0] += w * (1.0 - t);
            self.w[1] += w * t;
            self.bound += 2.0 * w * x * (self.floor - x) / self.floor;
        } else {
            let k = key(x, self.bits);
            let idx = (k - self.base) as usize + 1;
            let a = point(k, self.bits);
            if a == x {
                self.w[idx] += w;
            } else {
                let b = point(k + 1, self.bits);
                let t = (x - a) / (b - a);
                self.w[idx] += w * (1.0 - t);
                self.w[idx + 1] += w * t;
                self.bound += 2.0 * w * (x - a) * (b - x) / (b - a);
            }
        }
    }

    fn location(&self, idx: usize) -> f64 {
        if idx == 0 {
            0.0
        } else {
            point(self.base + (idx - 1) as u64, self.bits)
        }
    }
}

/// Streams all pairwise combinations `op(x, y)` with weight `wx·wy` into the
/// fine grid. Work is split into a fixed number of chunks over `a`'s atoms
/// and reduced in chunk order, so the result does not depend on threads.
///
/// With `symmetric` (`a == b` and `op` commutative) only pairs `j ≤ k` are
/// visited, off-diagonal ones with doubled weight.
fn stream_pairs<F>(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    xmax: f64,
    cfg: &GridConfig,
    symmetric: bool,
    op: F,
) -> (Vec<(f64, f64)>, u32, f64)
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let bits = fine_bits_for(xmax, cfg);
    let floor = cfg.floor();
    let ranges = if symmetric { triangle_chunks(a.len(), STREAM_CHUNKS) } else { par::chunks(a.len(), STREAM_CHUNKS) };
    let partials = par::map(&ranges, |range| {
        let mut acc = Dense::new(bits, floor, xmax);
        for k in range.clone() {
            let (x, wx) = (a.locations()[k], a.weights()[k]);
            if symmetric {
                acc.deposit(op(x, x), wx * wx);
                for j in k + 1..b.len() {
                    acc.deposit(op(x, b.locations()[j]), 2.0 * wx * b.weights()[j]);
                }
            } else {
                for (y, wy) in b.atoms() {
                    acc.deposit(op(x, y), wx * wy);
                }
            }
        }
        acc
    });
    let mut iter = partials.into_iter();
    let mut total = iter.next().expect("at least one chunk");
    for p in iter {
        for (t, v) in total.w.iter_mut().zip(&p.w) {
            *t += v;
        }
        total.bound += p.bound;
    }
    let atoms: Vec<(f64, f64)> =
        total.w.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, &w)| (total.location(i), w)).collect();
    (atoms, bits, total.bound)
}

/// Splits rows `0..n` of the upper triangle into `parts` ranges of similar
/// pair counts. Depends only on `n` and `parts`.
fn triangle_chunks(n: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let parts = parts.clamp(1, n.max(1));
    let total = n * (n + 1) / 2;
    let mut out = Vec::with_capacity(parts);
    let (mut start, mut done) = (0, 0);
    for p in 1..=parts {
        let target = total * p / parts;
        let mut end = start;
        while end < n && (done < target || end == start) {
            done += n - end;
            end += 1;
        }
        if p == parts {
            end = n;
        }
        if end > start {
            out.push(start..end);
        }
        start = end;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn combine_coarse<F>(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    xmax: f64,
    budget: usize,
    strategy: &Coarsening,
    cap: usize,
    symmetric: bool,
    op: F,
) -> Result<CoarsenReceipt>
where
    F: Fn(f64, f64) -> f64 + Sync + Send + Copy,
{
    let pairs = a.len().saturating_mul(b.len());
    if pairs <= cap {
        let exact = super::pairwise(a, b, cap, op)?;
        return Ok(super::coarsen_with(&exact, budget, strategy));
    }
    match strategy {
        Coarsening::Barycenter => Err(Error::AtomOverflow { atoms: pairs, cap }),
        Coarsening::Grid(cfg) => {
            let (atoms, bits, cost) = stream_pairs(a, b, xmax, cfg, symmetric, op);
            let mut r = reduce(atoms, bits, budget.max(1), cfg);
            r.w1_error_bound += cost;
            Ok(r)
        }
    }
}

/// `μ * ν` coarsened to `budget` atoms. Pair counts above `cap` are streamed
/// into the grid under [`Coarsening::Grid`] and rejected under
/// [`Coarsening::Barycenter`].
pub fn convolve_coarse(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    budget: usize,
    strategy: &Coarsening,
    cap: usize,
) -> Result<CoarsenReceipt> {
    let xmax = mu.max_location() + nu.max_location();
    combine_coarse(mu, nu, xmax, budget, strategy, cap, mu == nu, |x, y| x + y)
}

/// `φ ∘ μ` coarsened to `budget` atoms.
pub fn scale_product_coarse(
    phi: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    budget: usize,
    strategy: &Coarsening,
    cap: usize,
) -> Result<CoarsenReceipt> {
    let xmax = phi.max_location() * mu.max_location();
    combine_coarse(phi, mu, xmax, budget, strategy, cap, false, |z, x| z * x)
}

/// Default-cap convenience used by tests and benches.
pub fn convolve_grid(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    budget: usize,
    cfg: &GridConfig,
) -> Result<CoarsenReceipt> {
    convolve_coarse(mu, nu, budget, &Coarsening::Grid(cfg.clone()), HARD_ATOM_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_w1(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
        // area between CDFs on the merged grid
        let mut xs: Vec<f64> = a.locations().iter().chain(b.locations()).copied().collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.windows(2).map(|w| (a.cdf(w[0]) - b.cdf(w[0])).abs() * (w[1] - w[0])).sum()
    }

    #[test]
    fn grid_points_are_nested() {
        let floor = 2f64.powi(-24);
        for &x in &[1.0, 1.5, 3.0, 0.75, 1.0 + 1.0 / 1024.0] {
            let fine = on_grid(x, 10, floor);
            assert!(fine);
        }
        assert!(on_grid(1.5, 1, floor));
        assert!(!on_grid(1.25, 1, floor));
        assert!(on_grid(1.25, 2, floor));
        assert!(on_grid(0.0, 0, floor));
    }

    #[test]
    fn split_preserves_mass_and_mean() {
        let mu = DiscreteMeasure::new(&[0.3, 1.1, 2.7, 1e-9], &[0.25, 0.25, 0.25, 0.25]).unwrap();
        let (atoms, bound) = project_sorted(&mu.atoms().collect::<Vec<_>>(), 2, 2f64.powi(-24));
        let out = DiscreteMeasure::from_sorted_pairs(&atoms);
        assert!((out.mass() - 1.0).abs() < 1e-15);
        assert!((out.moment(1.0) - mu.moment(1.0)).abs() < 1e-15);
        assert!(exact_w1(&mu, &out) <= bound + 1e-15);
        assert!(out.atoms().all(|(x, _)| on_grid(x, 2, 2f64.powi(-24))));
    }

    #[test]
    fn nested_projection_composes() {
        let cfg = GridConfig::default();
        let mu = DiscreteMeasure::new(&[0.31, 0.77, 1.13, 2.9, 5.5], &[0.1, 0.2, 0.3, 0.25, 0.15]).unwrap();
        let pairs: Vec<_> = mu.atoms().collect();
        let (fine, _) = project_sorted(&pairs, 8, cfg.floor());
        let (twice, _) = project_sorted(&fine, 3, cfg.floor());
        let (once, _) = project_sorted(&pairs, 3, cfg.floor());
        assert_eq!(twice.len(), once.len());
        for (a, b) in twice.iter().zip(&once) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-15);
        }
    }

    #[test]
    fn streaming_matches_exact_then_project() {
        let cfg = GridConfig::default();
        let locs: Vec<f64> = (0..40).map(|k| 0.05 * k as f64 + 0.013 * (k % 3) as f64).collect();
        let w = vec![1.0 / 40.0; 40];
        let mu = DiscreteMeasure::new(&locs, &w).unwrap();
        let streamed = convolve_coarse(&mu, &mu, 64, &Coarsening::Grid(cfg.clone()), 10).unwrap();
        let exact = super::super::convolve(&mu, &mu).unwrap();
        let projected = project(&exact, 64, &cfg);
        assert_eq!(streamed.result.locations(), projected.result.locations());
        for (a, b) in streamed.result.weights().iter().zip(projected.result.weights()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(exact_w1(&exact, &streamed.result) <= streamed.w1_error_bound + 1e-12);
        assert!((streamed.result.moment(1.0) - exact.moment(1.0)).abs() < 1e-12);
    }

    #[test]
    fn triangle_chunks_cover_rows() {
        for n in [0, 1, 2, 7, 100, 4096] {
            let r = triangle_chunks(n, 8);
            assert_eq!(r.iter().map(|c| c.len()).sum::<usize>(), n);
            assert!(r.windows(2).all(|w| w[0].end == w[1].start));
        }
    }

    #[test]
    fn symmetric_stream_matches_full_sweep() {
        let locs: Vec<f64> = (0..57).map(|k| (0.37 * k as f64).sin().abs() * 3.0 + 0.01 * k as f64).collect();
        let w: Vec<f64> = (0..57).map(|k| 1.0 + (k % 5) as f64).collect();
        let s: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|v| v / s).collect();
        let mu = DiscreteMeasure::new(&locs, &w).unwrap();
        let xmax = 2.0 * mu.max_location();
        let cfg = GridConfig::default();
        let (full, ..) = stream_pairs(&mu, &mu, xmax, &cfg, false, |x, y| x + y);
        let (half, ..) = stream_pairs(&mu, &mu, xmax, &cfg, true, |x, y| x + y);
        assert_eq!(full.len(), half.len());
        for (a, b) in full.iter().zip(&half) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_atoms_stay_exact() {
        let cfg = GridConfig::default();
        let mu = DiscreteMeasure::new(&[0.0, 3.0, 7.0, 11.0, 13.0], &[0.5, 0.2, 0.1, 0.1, 0.1]).unwrap();
        let r = project(&mu, 3, &cfg);
        assert!(r.result.len() <= 3);
        assert_eq!(r.result.weight_at(0.0), 0.5);
    }

    #[test]
    fn barycenter_overflow_and_grid_streaming() {
        let mu = DiscreteMeasure::new(&[0.0, 1.0, 2.0, 3.0], &[0.25; 4]).unwrap();
        assert!(matches!(
            convolve_coarse(&mu, &mu, 4, &Coarsening::Barycenter, 8),
            Err(Error::AtomOverflow { atoms: 16, cap: 8 })
        ));
        let r = convolve_coarse(&mu, &mu, 100, &Coarsening::default(), 8).unwrap();
        assert_eq!(r.result.len(), 7);
        assert_eq!(r.w1_error_bound, 0.0);
    }
}
