//! Distances between atomic probability measures on the half-line.

mod fm;
mod zeta;

use serde::{Deserialize, Serialize};

use crate::measure::DiscreteMeasure;

pub use fm::fortet_mourier;
pub use zeta::{rio_check, zolotarev_estimate, zolotarev_lower, zolotarev_upper, RioCheck, ZetaSandwich};

/// Mass and first moment must agree this closely for ζ_r to be finite.
pub const EQUAL_MOMENT_TOL: f64 = 1e-9;
/// Default fill-point count for the ζ grid estimate.
pub const DEFAULT_GRID_N: usize = 64;

/// Atoms of both measures on their merged support: `(x, w_mu, w_nu)`.
pub(crate) fn merged(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Vec<(f64, f64, f64)> {
    let (a, b) = (mu.locations(), nu.locations());
    let (wa, wb) = (mu.weights(), nu.weights());
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push((a[i], wa[i], 0.0));
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push((b[j], 0.0, wb[j]));
            j += 1;
        } else {
            out.push((a[i], wa[i], wb[j]));
            i += 1;
            j += 1;
        }
    }
    out
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(self) -> f64 {
        self.s + self.c
    }
}

/// Pieces of `F_ν − F_μ`: on `[x_k, x_{k+1})` the difference is `d_k`.
///
/// Below the joint median the pieces are prefix sums; above it they are
/// the total minus a suffix sum, which keeps full relative accuracy in the
/// upper tail where both CDFs are close to 1.
fn cdf_differences(m: &[(f64, f64, f64)]) -> Vec<f64> {
    let n = m.len();
    let mut both = Sum::default();
    let mut total = Sum::default();
    for &(_, wa, wb) in m {
        both.add(wa + wb);
        total.add(wb - wa);
    }
    let half = 0.5 * both.value();
    let total = total.value();
    let mut d = vec![0.0; n];
    let (mut pre, mut mass) = (Sum::default(), Sum::default());
    let mut split = n;
    for (k, &(_, wa, wb)) in m.iter().enumerate() {
        mass.add(wa + wb);
        if mass.value() > half {
            split = k;
            break;
        }
        pre.add(wb - wa);
        d[k] = pre.value();
    }
    let mut suf = Sum::default();
    for k in (split..n).rev() {
        d[k] = total - suf.value();
        suf.add(m[k].2 - m[k].1);
    }
    d
}

/// `∫ |F_μ − F_ν|`, exact on the merged atom grid.
pub fn wasserstein1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let m = merged(mu, nu);
    let d = cdf_differences(&m);
    let mut acc = Sum::default();
    for (w, dk) in m.windows(2).zip(&d) {
        acc.add(dk.abs() * (w[1].0 - w[0].0));
    }
    acc.value()
}

/// Piecewise-linear function on `[0, ∞)`, constant after the last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl Potential {
    pub fn zero() -> Self {
        Self { breakpoints: vec![0.0], values: vec![0.0] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let b = &self.breakpoints;
        let k = b.partition_point(|&t| t <= x);
        if k == 0 {
            return self.values[0];
        }
        if k == b.len() {
            return *self.values.last().expect("nonempty");
        }
        let (x0, x1) = (b[k - 1], b[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, mu: &DiscreteMeasure) -> f64 {
        mu.atoms().map(|(x, w)| w * self.eval(x)).sum()
    }

    /// Largest slope magnitude between consecutive breakpoints.
    pub fn lipschitz(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .filter(|(b, _)| b[1] > b[0])
            .map(|(b, v)| ((v[1] - v[0]) / (b[1] - b[0])).abs())
            .fold(0.0, f64::max)
    }
}

/// Optimal Kantorovich potential `f₀(x) = ∫₀ˣ sign(F_ν − F_μ)` and its value
/// `⟨f₀, μ − ν⟩`, which equals the W1 distance.
pub fn kr_potential(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (Potential, f64) {
    let m = merged(mu, nu);
    let d = cdf_differences(&m);
    if d.iter().all(|&x| x == 0.0) {
        return (Potential::zero(), 0.0);
    }
    let mut breakpoints = Vec::with_capacity(m.len() + 1);
    let mut values = Vec::with_capacity(m.len() + 1);
    breakpoints.push(0.0);
    values.push(0.0);
    let mut v = 0.0;
    let mut prev = 0.0;
    // F's are 0 on [0, x_0)
    for (k, &(x, _, _)) in m.iter().enumerate() {
        if x > prev {
            let slope = if k == 0 { 0.0 } else { sign(d[k - 1]) };
            v += slope * (x - prev);
            breakpoints.push(x);
            values.push(v);
            prev = x;
        }
    }
    let f = Potential { breakpoints, values };
    let value = f.integrate(mu) - f.integrate(nu);
    (f, value)
}

fn sign(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Summary of all distances between two measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub w1: f64,
    pub fm: f64,
    /// Absent when mass or mean differ and the seminorm is infinite.
    pub zeta: Option<ZetaSandwich>,
    pub rio_ok: Option<bool>,
}

pub fn metric_report(mu: &DiscreteMeasure, nu: &DiscreteMeasure, r: f64, grid_n: usize) -> crate::Result<MetricReport> {
    let w1 = wasserstein1(mu, nu);
    let fm = fortet_mourier(mu, nu);
    let (zeta, rio_ok) = match zolotarev_estimate(mu, nu, r, grid_n) {
        Ok(z) => (Some(z), Some(rio_check(mu, nu, r)?.ok)),
        Err(crate::Error::InfiniteSeminorm { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(MetricReport { w1, fm, zeta, rio_ok })
}

#[cfg(test)]
pub(crate) mod oracle {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};

    use crate::measure::DiscreteMeasure;

    /// Transport LP `min Σ π_ij |x_i − y_j|` with both marginals fixed.
    pub fn transport_w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<Vec<_>> = mu
            .locations()
            .iter()
            .map(|&x| nu.locations().iter().map(|&y| p.add_var((x - y).abs(), (0.0, f64::INFINITY))).collect())
            .collect();
        for (i, &w) in mu.weights().iter().enumerate() {
            let row: Vec<_> = vars[i].iter().map(|&v| (v, 1.0)).collect();
            p.add_constraint(row, ComparisonOp::Eq, w);
        }
        for (j, &w) in nu.weights().iter().enumerate() {
            let col: Vec<_> = vars.iter().map(|r| (r[j], 1.0)).collect();
            p.add_constraint(col, ComparisonOp::Eq, w);
        }
        p.solve().unwrap().into_solution().ok().unwrap().objective()
    }

    /// FM as an LP over values at the merged atoms with all-pairs Lipschitz
    /// and box constraints.
    pub fn fm_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let m = super::merged(mu, nu);
        let mut p = Problem::new(OptimizationDirection::Maximize);
        let v: Vec<_> = m.iter().map(|&(_, a, b)| p.add_var(a - b, (-1.0, 1.0))).collect();
        for j in 0..m.len() {
            for k in j + 1..m.len() {
                let d = m[k].0 - m[j].0;
                p.add_constraint([(v[j], 1.0), (v[k], -1.0)], ComparisonOp::Le, d);
                p.add_constraint([(v[k], 1.0), (v[j], -1.0)], ComparisonOp::Le, d);
            }
        }
        p.solve().unwrap().into_solution().ok().unwrap().objective()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms(l: &[f64], w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(l, w).unwrap()
    }

    #[test]
    fn w1_examples() {
        assert_eq!(wasserstein1(&DiscreteMeasure::dirac(0.3), &DiscreteMeasure::dirac(2.0)), 1.7);
        let mu = atoms(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(wasserstein1(&mu, &DiscreteMeasure::dirac(0.5)), 0.5);
        assert_eq!(wasserstein1(&mu, &mu), 0.0);
    }

    #[test]
    fn w1_matches_transport_lp() {
        let mu = atoms(&[0.0, 0.7, 1.9, 3.0], &[0.1, 0.4, 0.3, 0.2]);
        let nu = atoms(&[0.2, 1.0, 2.5], &[0.5, 0.25, 0.25]);
        assert!((wasserstein1(&mu, &nu) - oracle::transport_w1(&mu, &nu)).abs() < 1e-12);
    }

    #[test]
    fn kr_examples() {
        let (f, v) = kr_potential(&DiscreteMeasure::dirac(0.0), &DiscreteMeasure::dirac(1.0));
        // f₀ has slope −1 on [0,1): ⟨f₀, δ₀ − δ₁⟩ = 0 − (−1) = 1
        assert_eq!(v, 1.0);
        assert_eq!(f.eval(0.5).abs(), 0.5);
        assert_eq!(f.lipschitz(), 1.0);
        let mu = atoms(&[0.0, 2.0], &[0.5, 0.5]);
        let (f, v) = kr_potential(&mu, &mu);
        assert_eq!(v, 0.0);
        assert_eq!(f, Potential::zero());
    }

    #[test]
    fn kr_value_is_w1() {
        let mu = atoms(&[0.0, 0.7, 1.9, 3.0], &[0.1, 0.4, 0.3, 0.2]);
        let nu = atoms(&[0.2, 1.0, 2.5], &[0.5, 0.25, 0.25]);
        let (f, v) = kr_potential(&mu, &nu);
        assert!((v - wasserstein1(&mu, &nu)).abs() < 1e-12);
        assert!(f.lipschitz() <= 1.0);
    }

    #[test]
    fn report_skips_zeta_for_unequal_means() {
        let r = metric_report(&DiscreteMeasure::dirac(0.0), &DiscreteMeasure::dirac(1.0), 1.5, 16).unwrap();
        assert_eq!(r.w1, 1.0);
        assert_eq!(r.fm, 1.0);
        assert!(r.zeta.is_none() && r.rio_ok.is_none());
    }
}
