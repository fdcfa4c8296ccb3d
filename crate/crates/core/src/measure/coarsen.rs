use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::grid::{self, GridConfig};
use super::DiscreteMeasure;

/// A coarsened measure together with an upper bound on
/// `W1(input, result)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarsenReceipt {
    pub result: DiscreteMeasure,
    pub w1_error_bound: f64,
}

impl CoarsenReceipt {
    pub fn exact(result: DiscreteMeasure) -> Self {
        Self { result, w1_error_bound: 0.0 }
    }
}

/// How atom counts are brought back under budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coarsening {
    /// Greedy merge of adjacent clusters into their barycenters.
    Barycenter,
    /// Projection onto a fixed dyadic grid by mass splitting between the two
    /// neighbouring grid points. Iterates share support, which is what makes
    /// atom-wise comparisons between successive iterates meaningful.
    Grid(GridConfig),
}

impl Default for Coarsening {
    fn default() -> Self {
        Coarsening::Grid(GridConfig::default())
    }
}

/// Greedy barycenter coarsening to at most `budget` atoms.
///
/// Adjacent clusters are merged in order of least increase of
/// `weight × spread`; each merged cluster is replaced by its weighted
/// barycenter, so mass and first moment are preserved. The reported bound is
/// the cost of moving every atom to its cluster barycenter, `Σ w |x − b|`,
/// which never exceeds `Σ clusters weight × (max − min)`.
pub fn coarsen(mu: &DiscreteMeasure, budget: usize) -> CoarsenReceipt {
    let budget = budget.max(1);
    if mu.len() <= budget {
        return CoarsenReceipt::exact(mu.clone());
    }
    let n = mu.len();
    let mut clusters: Vec<Cluster> =
        mu.atoms().map(|(x, w)| Cluster { w, s: w * x, lo: x, hi: x, alive: true, version: 0 }).collect();
    let mut prev: Vec<usize> = (0..n).map(|k| k.wrapping_sub(1)).collect();
    let mut next: Vec<usize> = (1..=n).collect();

    let mut heap = BinaryHeap::with_capacity(n);
    for k in 0..n - 1 {
        heap.push(Candidate::new(&clusters, k, k + 1));
    }
    let mut count = n;
    while count > budget {
        let Some(c) = heap.pop() else { break };
        let (l, r) = (c.left, c.right);
        if !clusters[l].alive || !clusters[r].alive || clusters[l].version != c.lv || clusters[r].version != c.rv {
            continue;
        }
        let right = clusters[r].clone();
        let left = &mut clusters[l];
        left.w += right.w;
        left.s += right.s;
        left.hi = right.hi;
        left.version += 1;
        clusters[r].alive = false;
        let nr = next[r];
        next[l] = nr;
        if nr < n {
            prev[nr] = l;
            heap.push(Candidate::new(&clusters, l, nr));
        }
        let pl = prev[l];
        if pl < n {
            heap.push(Candidate::new(&clusters, pl, l));
        }
        count -= 1;
    }

    let mut bound = 0.0;
    let mut locs = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let mut k = 0;
    while k < n {
        let c = &clusters[k];
        let b = (c.s / c.w).clamp(c.lo, c.hi);
        let b = if next[k] == k + 1 { c.lo } else { b };
        bound += (k..next[k].min(n)).map(|j| mu.weights()[j] * (mu.locations()[j] - b).abs()).sum::<f64>();
        locs.push(b);
        weights.push(c.w);
        k = next[k];
    }
    // barycenters of disjoint ascending clusters are ascending, but two
    // clusters can round onto the same value
    let pairs: Vec<(f64, f64)> = locs.into_iter().zip(weights).collect();
    CoarsenReceipt { result: DiscreteMeasure::from_sorted_pairs(&pairs), w1_error_bound: bound }
}

/// Coarsens with the given strategy; identity when already under budget.
pub fn coarsen_with(mu: &DiscreteMeasure, budget: usize, strategy: &Coarsening) -> CoarsenReceipt {
    if mu.len() <= budget.max(1) {
        return CoarsenReceipt::exact(mu.clone());
    }
    match strategy {
        Coarsening::Barycenter => coarsen(mu, budget),
        Coarsening::Grid(cfg) => grid::project(mu, budget, cfg),
    }
}

#[derive(Debug, Clone)]
struct Cluster {
    w: f64,
    s: f64,
    lo: f64,
    hi: f64,
    alive: bool,
    version: u32,
}

impl Cluster {
    fn cost(&self) -> f64 {
        self.w * (self.hi - self.lo)
    }
}

#[derive(Debug)]
struct Candidate {
    delta: f64,
    left: usize,
    right: usize,
    lv: u32,
    rv: u32,
}

impl Candidate {
    fn new(cs: &[Cluster], left: usize, right: usize) -> Self {
        let (a, b) = (&cs[left], &cs[right]);
        let delta = (a.w + b.w) * (b.hi - a.lo) - a.cost() - b.cost();
        Self { delta, left, right, lv: a.version, rv: b.version }
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // min-heap on delta, ties broken by position
    fn cmp(&self, other: &Self) -> Ordering {
        other.delta.total_cmp(&self.delta).then_with(|| other.left.cmp(&self.left))
    }
}
