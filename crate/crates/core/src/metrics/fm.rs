use std::collections::VecDeque;

use super::merged;
use crate::measure::DiscreteMeasure;

/// Fortet–Mourier distance: sup of `⟨f, μ − ν⟩` over `f` with Lipschitz
/// constant and sup norm both at most 1.
///
/// Only the values of `f` at the merged atoms matter, and in one dimension
/// neighbour Lipschitz constraints imply the global ones, so the supremum is
/// a chain LP. It is solved exactly by dynamic programming over the concave
/// piecewise-linear value function `V_k(v)` = best prefix objective with
/// `f(x_k) = v`, kept as a left-end value plus segments of decreasing slope.
pub fn fortet_mourier(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let m = merged(mu, nu);
    if m.is_empty() {
        return 0.0;
    }
    let mut v = ChainValue::linear(m[0].1 - m[0].2);
    for w in m.windows(2) {
        v.dilate(w[1].0 - w[0].0);
        v.add_linear(w[1].1 - w[1].2);
    }
    v.max().max(0.0)
}

/// Concave function on `[−1, 1]`. Stored slopes are offset by `shift` so
/// adding a linear term is O(1).
struct ChainValue {
    left: f64,
    segs: VecDeque<(f64, f64)>,
    shift: f64,
}

impl ChainValue {
    fn linear(c: f64) -> Self {
        Self { left: -c, segs: VecDeque::from([(2.0, c)]), shift: 0.0 }
    }

    fn add_linear(&mut self, c: f64) {
        self.left -= c;
        self.shift += c;
    }

    /// `v ↦ max_{|u − v| ≤ d, |u| ≤ 1} V(u)` restricted to `[−1, 1]`.
    fn dilate(&mut self, d: f64) {
        if d <= 0.0 {
            return;
        }
        let shift = self.shift;
        let p = self.segs.partition_point(|&(_, s)| s + shift > 0.0);
        self.segs.insert(p, (2.0 * d, -shift));
        let mut cut = d;
        while cut > 0.0 {
            let Some(front) = self.segs.front_mut() else { break };
            let take = front.0.min(cut);
            self.left += (front.1 + shift) * take;
            front.0 -= take;
            cut -= take;
            if front.0 <= 0.0 {
                self.segs.pop_front();
            }
        }
        let mut cut = d;
        while cut > 0.0 {
            let Some(back) = self.segs.back_mut() else { break };
            let take = back.0.min(cut);
            back.0 -= take;
            cut -= take;
            if back.0 <= 0.0 {
                self.segs.pop_back();
            }
        }
    }

    fn max(&self) -> f64 {
        self.left + self.segs.iter().map(|&(len, s)| len * (s + self.shift).max(0.0)).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{oracle, wasserstein1};
    use super::*;

    fn atoms(l: &[f64], w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(l, w).unwrap()
    }

    /// Dense search over the two values of f.
    fn two_atom_grid(a: f64, b: f64) -> f64 {
        let steps = 400;
        let mut best = f64::MIN;
        for i in 0..=steps {
            for j in 0..=steps {
                let fa = -1.0 + 2.0 * i as f64 / steps as f64;
                let fb = -1.0 + 2.0 * j as f64 / steps as f64;
                if (fa - fb).abs() <= (a - b).abs() + 1e-15 {
                    best = best.max(fa - fb);
                }
            }
        }
        best
    }

    #[test]
    fn saturated_cap() {
        for m in [2.0, 3.5, 10.0] {
            let v = fortet_mourier(&DiscreteMeasure::dirac(m), &DiscreteMeasure::dirac(0.0));
            assert_eq!(v, 2.0);
            assert!((v - two_atom_grid(m, 0.0)).abs() < 1e-12);
        }
        let v = fortet_mourier(&DiscreteMeasure::dirac(0.0), &DiscreteMeasure::dirac(0.6));
        assert!((v - 0.6).abs() < 1e-15);
        assert!((v - two_atom_grid(0.0, 0.6)).abs() < 1e-12);
    }

    #[test]
    fn identical_is_zero() {
        let mu = atoms(&[0.0, 1.0, 4.0], &[0.2, 0.3, 0.5]);
        assert_eq!(fortet_mourier(&mu, &mu), 0.0);
    }

    #[test]
    fn matches_lp() {
        let cases = [
            (atoms(&[0.0, 0.7, 1.9, 3.0], &[0.1, 0.4, 0.3, 0.2]), atoms(&[0.2, 1.0, 2.5], &[0.5, 0.25, 0.25])),
            (atoms(&[0.0, 5.0], &[0.5, 0.5]), atoms(&[0.1, 2.4, 6.0], &[0.3, 0.3, 0.4])),
            (atoms(&[0.0, 0.01, 0.02], &[0.2, 0.3, 0.5]), atoms(&[3.0], &[1.0])),
        ];
        for (mu, nu) in &cases {
            let dp = fortet_mourier(mu, nu);
            let lp = oracle::fm_lp(mu, nu);
            assert!((dp - lp).abs() < 1e-9, "{dp} vs {lp}");
            assert!(dp <= wasserstein1(mu, nu) + 1e-12 && dp <= 2.0);
        }
    }
}
