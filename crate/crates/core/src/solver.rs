//! Picard iteration `μₙ₊₁ = 𝐏μₙ` and fixed-point diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::collision::CollisionModel;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::metrics::{wasserstein1, zolotarev_upper};
use crate::par;

/// Tolerance on mass and first moment for membership in D.
pub const D_TOL: f64 = 1e-9;
pub const DEFAULT_COLLAPSE_THRESHOLD: f64 = 1e-3;
/// `after < before − STRICT_MARGIN` counts as a strict contraction.
pub const STRICT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateOptions {
    pub max_iter: usize,
    pub w1_tol: f64,
    /// Keep every `stride`-th iterate (the initial and final one always).
    pub stride: usize,
    pub collapse_threshold: f64,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self { max_iter: 200, w1_tol: 1e-3, stride: 10, collapse_threshold: DEFAULT_COLLAPSE_THRESHOLD }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub m1: f64,
    pub mr: f64,
    pub m2: f64,
}

impl Moments {
    pub fn of(mu: &DiscreteMeasure, r: f64) -> Self {
        Self { m1: mu.moment(1.0), mr: mu.moment(r), m2: mu.moment(2.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    /// `(n, μₙ)` at the configured stride.
    pub iterates_kept: Vec<(usize, DiscreteMeasure)>,
    /// `W1(μₙ₊₁, μₙ)` for n = 0, 1, ...
    pub w1_gaps: Vec<f64>,
    /// Atomwise upper bound of `ζ_r(μₙ₊₁ − μₙ)`; `None` where means differ.
    pub zeta_upper_gaps: Vec<Option<f64>>,
    /// Moments of μ₀, μ₁, ...
    pub moments: Vec<Moments>,
    /// W1 error bound of each operator application.
    pub step_bounds: Vec<f64>,
    pub converged: bool,
    pub collapse_detected: bool,
    pub n_iterations: usize,
    pub error_ledger: f64,
    pub last: DiscreteMeasure,
}

/// Rejects initial data outside D.
pub fn check_initial(mu0: &DiscreteMeasure) -> Result<()> {
    let (mass, m1) = (mu0.mass(), mu0.moment(1.0));
    if (mass - 1.0).abs() > D_TOL || (m1 - 1.0).abs() > D_TOL {
        return Err(Error::InvalidInitial { mass, m1 });
    }
    Ok(())
}

/// Iterates the operator until the W1 gap drops to `w1_tol` or `max_iter`
/// applications are done.
pub fn iterate(model: &CollisionModel, mu0: &DiscreteMeasure, opts: &IterateOptions) -> Result<FixedPointReport> {
    iterate_with(model, mu0, opts, |_, _| {})
}

/// As [`iterate`], calling `observe(n, μₙ)` on every new iterate.
pub fn iterate_with<F: FnMut(usize, &DiscreteMeasure)>(
    model: &CollisionModel,
    mu0: &DiscreteMeasure,
    opts: &IterateOptions,
    mut observe: F,
) -> Result<FixedPointReport> {
    check_initial(mu0)?;
    if opts.w1_tol.is_nan() || opts.w1_tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("w1_tol {} must be > 0", opts.w1_tol)));
    }
    let r = model.r();
    let stride = opts.stride.max(1);
    let mut rep = FixedPointReport {
        iterates_kept: vec![(0, mu0.clone())],
        w1_gaps: Vec::new(),
        zeta_upper_gaps: Vec::new(),
        moments: vec![Moments::of(mu0, r)],
        step_bounds: Vec::new(),
        converged: false,
        collapse_detected: false,
        n_iterations: 0,
        error_ledger: 0.0,
        last: mu0.clone(),
    };
    let mut cur = mu0.clone();
    for n in 1..=opts.max_iter {
        let step = model.apply(&cur)?;
        let next = step.result;
        let gap = wasserstein1(&next, &cur);
        rep.w1_gaps.push(gap);
        rep.zeta_upper_gaps.push(zolotarev_upper(&next, &cur, r).ok());
        rep.step_bounds.push(step.coarsening_bound + step.truncation_bound);
        rep.error_ledger += step.coarsening_bound + step.truncation_bound;
        let mom = Moments::of(&next, r);
        rep.moments.push(mom);
        rep.n_iterations = n;
        if next.median() < opts.collapse_threshold && (mom.m1 - 1.0).abs() <= D_TOL {
            rep.collapse_detected = true;
        }
        observe(n, &next);
        let done = gap <= opts.w1_tol;
        if n % stride == 0 || done || n == opts.max_iter {
            rep.iterates_kept.push((n, next.clone()));
        }
        cur = next;
        if done {
            rep.converged = true;
            break;
        }
    }
    rep.last = cur;
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    pub before: f64,
    pub after: f64,
    pub strict: bool,
    /// Operator error bounds of both applications.
    pub error_ledger: f64,
    /// `after ≤ before + error_ledger`.
    pub nonexpansive: bool,
}

/// Compares `W1(μ, ν)` with `W1(𝐏μ, 𝐏ν)`.
pub fn verify_contraction(
    model: &CollisionModel,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<ContractionCheck> {
    let before = wasserstein1(mu, nu);
    let pm = model.apply(mu)?;
    let pn = model.apply(nu)?;
    let after = wasserstein1(&pm.result, &pn.result);
    let error_ledger = pm.w1_error_bound() + pn.w1_error_bound();
    Ok(ContractionCheck {
        before,
        after,
        strict: after < before - STRICT_MARGIN,
        error_ledger,
        nonexpansive: after <= before + error_ledger + 1e-12 * before.max(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportDiagnostics {
    pub min_atom: f64,
    pub max_atom: f64,
    pub fill_ratio: f64,
    /// `[0, quantile(0.999)]` has zero length.
    pub degenerate: bool,
}

/// Fraction of `fill_grid_n` equal cells of `[0, quantile(0.999)]` holding
/// at least one atom.
pub fn support_diagnostics(mu: &DiscreteMeasure, fill_grid_n: usize) -> SupportDiagnostics {
    let n = fill_grid_n.max(1);
    let top = mu.quantile_unchecked(0.999);
    let (min_atom, max_atom) = (mu.min_location(), mu.max_location());
    if top <= 0.0 {
        return SupportDiagnostics { min_atom, max_atom, fill_ratio: 1.0, degenerate: true };
    }
    let mut hit = vec![false; n];
    for &x in mu.locations() {
        if x > top {
            break;
        }
        let k = ((x / top * n as f64) as usize).min(n - 1);
        hit[k] = true;
    }
    let filled = hit.iter().filter(|&&h| h).count();
    SupportDiagnostics { min_atom, max_atom, fill_ratio: filled as f64 / n as f64, degenerate: false }
}

fn charfn(mu: &DiscreteMeasure, t: f64) -> Complex64 {
    mu.atoms().map(|(x, w)| Complex64::from_polar(w, t * x)).sum()
}

/// `max_t |ψ_μ(t) − Σᵢ αᵢ ∫ ψ_μ(tz)ⁱ φᵢ(dz)|` over `t_grid`, with the
/// discretized mixing laws. Zero exactly at fixed points of the operator.
pub fn charfn_residual(model: &CollisionModel, mu: &DiscreteMeasure, t_grid: &[f64]) -> f64 {
    let per_t = par::map(t_grid, |&t| {
        let lhs = charfn(mu, t);
        let mut rhs = Complex64::new(0.0, 0.0);
        for c in model.components() {
            let i = c.index as i32;
            let inner: Complex64 = c.phi_atoms().atoms().map(|(z, w)| charfn(mu, t * z).powi(i) * w).sum();
            rhs += inner * c.alpha;
        }
        (lhs - rhs).norm()
    });
    per_t.into_iter().fold(0.0, f64::max)
}
