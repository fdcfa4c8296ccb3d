use proptest::prelude::*;

use kineq_core::collision::CollisionModel;
use kineq_core::measure::{coarsen_with, Coarsening, DiscreteMeasure, GridConfig};
use kineq_core::metrics::{fortet_mourier, rio_check, wasserstein1, zolotarev_estimate};
use kineq_core::sampler::{empirical_apply, RngStream};
use kineq_core::solver::verify_contraction;
use kineq_core::ModelSpec;

fn measure(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((0.0f64..5.0, 0.01f64..1.0), 1..=max_atoms).prop_map(|atoms| {
        let s: f64 = atoms.iter().map(|a| a.1).sum();
        let (l, w): (Vec<f64>, Vec<f64>) = atoms.iter().map(|&(x, w)| (x, w / s)).unzip();
        DiscreteMeasure::new(&l, &w).unwrap()
    })
}

// W1 through the quantile coupling: ∫₀¹ |F⁻¹(u) − G⁻¹(u)| du over the merged
// cumulative breakpoints.
fn quantile_w1(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    let cum = |m: &DiscreteMeasure| {
        let mut acc = 0.0;
        m.weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect::<Vec<_>>()
    };
    let (ca, cb) = (cum(a), cum(b));
    let (mut i, mut j, mut u, mut total) = (0, 0, 0.0, 0.0);
    while i < a.len() && j < b.len() {
        let next = ca[i].min(cb[j]);
        total += (next - u) * (a.locations()[i] - b.locations()[j]).abs();
        u = next;
        if ca[i] <= next {
            i += 1;
        }
        if cb[j] <= next {
            j += 1;
        }
    }
    total
}

fn tjon_wu() -> CollisionModel {
    CollisionModel::new(ModelSpec::tjon_wu(16).with_budget(256)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measures_are_sorted_probabilities(mu in measure(40)) {
        prop_assert!((mu.mass() - 1.0).abs() < 1e-12);
        prop_assert!(mu.locations().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(mu.weights().iter().all(|&w| w > 0.0));
        let xs = mu.locations();
        prop_assert!(xs.windows(2).all(|w| mu.cdf(w[0]) <= mu.cdf(w[1])));
        prop_assert!((mu.cdf(mu.max_location()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn w1_is_a_metric(a in measure(20), b in measure(20), c in measure(20)) {
        let ab = wasserstein1(&a, &b);
        prop_assert_eq!(wasserstein1(&a, &a), 0.0);
        prop_assert!((ab - wasserstein1(&b, &a)).abs() < 1e-14);
        prop_assert!(ab <= wasserstein1(&a, &c) + wasserstein1(&c, &b) + 1e-12);
        prop_assert!((ab - quantile_w1(&a, &b)).abs() < 1e-12, "{} vs {}", ab, quantile_w1(&a, &b));
        // the mean is 1-Lipschitz
        prop_assert!((a.mean() - b.mean()).abs() <= ab + 1e-12);
        prop_assert!(fortet_mourier(&a, &b) <= ab + 1e-12);
    }

    #[test]
    fn coarsening_respects_budget_and_bound(mu in measure(60), budget in 1usize..30) {
        for strategy in [Coarsening::Barycenter, Coarsening::Grid(GridConfig::default())] {
            let r = coarsen_with(&mu, budget, &strategy);
            prop_assert!(r.result.len() <= budget);
            prop_assert!((r.result.mass() - 1.0).abs() < 1e-12);
            prop_assert!(quantile_w1(&mu, &r.result) <= r.w1_error_bound + 1e-12);
            if mu.len() <= budget && matches!(strategy, Coarsening::Barycenter) {
                prop_assert_eq!(r.w1_error_bound, 0.0);
            }
        }
        let bary = coarsen_with(&mu, budget, &Coarsening::Barycenter);
        prop_assert!((bary.result.mean() - mu.mean()).abs() < 1e-12);
    }

    #[test]
    fn zeta_sandwich_is_ordered(mu in measure(20), budget in 1usize..6) {
        let nu = coarsen_with(&mu, budget, &Coarsening::Barycenter).result;
        for r in [1.2, 1.5, 1.8] {
            let z = zolotarev_estimate(&mu, &nu, r, 16).unwrap();
            prop_assert!(z.lower <= z.estimate + 1e-12 && z.estimate <= z.upper + 1e-12, "{:?}", z);
            prop_assert!(rio_check(&mu, &nu, r).unwrap().ok);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn apply_keeps_mass_and_mean(mu in measure(8)) {
        let p = tjon_wu().apply(&mu).unwrap();
        prop_assert!((p.result.mass() - 1.0).abs() < 1e-12);
        prop_assert!((p.result.mean() - mu.mean()).abs() <= p.w1_error_bound() + 1e-9);
        prop_assert!(p.result.min_location() >= 0.0);
    }

    #[test]
    fn apply_is_nonexpansive(a in measure(6), b in measure(6)) {
        let c = verify_contraction(&tjon_wu(), &a, &b).unwrap();
        prop_assert!(c.nonexpansive, "{:?}", c);
    }

    #[test]
    fn sampler_is_seed_deterministic(mu in measure(6), seed in any::<u64>(), n in 1usize..10_000) {
        let m = tjon_wu();
        let a = empirical_apply(&m, &mu, n, &RngStream::new(seed, 3)).unwrap();
        let b = empirical_apply(&m, &mu, n, &RngStream::new(seed, 3)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!((a.mass() - 1.0).abs() < 1e-12);
    }
}

#[cfg(feature = "parallel")]
#[test]
fn thread_count_does_not_change_results() {
    let model = CollisionModel::new(ModelSpec::tjon_wu(32).with_budget(512)).unwrap();
    let mu = DiscreteMeasure::new(&[0.2, 1.0, 1.7, 3.1], &[0.1, 0.4, 0.3, 0.2]).unwrap();
    let run = || {
        let p = model.apply(&mu).unwrap();
        let q = model.apply(&p.result).unwrap();
        let e = empirical_apply(&model, &mu, 20_000, &RngStream::new(9, 0)).unwrap();
        (q.result, q.coarsening_bound, e)
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    assert_eq!(one.install(run), four.install(run));
}
