//! Time stepping of `dψ/dt + ψ = 𝐏ψ`.
//!
//! Both schemes are convex combinations of the current state and its image
//! under the operator, so they keep probability measures with mean 1 in
//! that class. Errors from coarsening add up step by step because the exact
//! step maps are nonexpansive in W1.

use serde::{Deserialize, Serialize};

use crate::collision::{ApplyReceipt, CollisionModel};
use crate::error::{Error, Result};
use crate::measure::{self, DiscreteMeasure};
use crate::metrics::wasserstein1;
use crate::solver::check_initial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `(1 − h)μ + h𝐏μ`
    Euler,
    /// `e^{−h}μ + (1 − e^{−h})𝐏μ`
    #[default]
    ExpEuler,
}

impl Scheme {
    fn keep_weight(self, h: f64) -> f64 {
        match self {
            Scheme::Euler => 1.0 - h,
            Scheme::ExpEuler => (-h).exp(),
        }
    }
}

fn blend(model: &CollisionModel, mu: &DiscreteMeasure, keep: f64) -> Result<ApplyReceipt> {
    let p = model.apply(mu)?;
    let moved = 1.0 - keep;
    if keep == 0.0 {
        return Ok(p);
    }
    let mixed = measure::mixture(&[(keep, mu), (moved, &p.result)]);
    let c = measure::coarsen_with(&mixed, model.budget(), &model.spec().coarsening);
    Ok(ApplyReceipt {
        result: c.result,
        coarsening_bound: moved * p.coarsening_bound + c.w1_error_bound,
        truncation_bound: moved * p.truncation_bound,
    })
}

/// One step of the forward Euler scheme; `h ∈ (0, 1]`.
pub fn euler_step(model: &CollisionModel, mu: &DiscreteMeasure, h: f64) -> Result<ApplyReceipt> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::StepOutOfRange(h));
    }
    blend(model, mu, Scheme::Euler.keep_weight(h))
}

/// One step of the exponential (Duhamel, frozen 𝐏ψ) scheme; `h > 0`.
pub fn exp_euler_step(model: &CollisionModel, mu: &DiscreteMeasure, h: f64) -> Result<ApplyReceipt> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::StepOutOfRange(h));
    }
    blend(model, mu, Scheme::ExpEuler.keep_weight(h))
}

pub fn step(model: &CollisionModel, mu: &DiscreteMeasure, h: f64, scheme: Scheme) -> Result<ApplyReceipt> {
    match scheme {
        Scheme::Euler => euler_step(model, mu, h),
        Scheme::ExpEuler => exp_euler_step(model, mu, h),
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub w1_to_ref: Option<f64>,
    pub m1: f64,
    pub mr: f64,
    pub error_ledger: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Kept times, ascending from 0.
    pub times: Vec<f64>,
    pub snapshots: Vec<DiscreteMeasure>,
    /// Accumulated error bound at each kept time.
    pub ledgers: Vec<f64>,
    /// One row per step, including t = 0.
    pub rows: Vec<TrajectoryRow>,
    pub scheme: Scheme,
    pub h: f64,
    pub error_ledger: f64,
    pub last: DiscreteMeasure,
}

impl Trajectory {
    /// `W1(ψ(t), reference)` at each kept time.
    pub fn w1_to(&self, reference: &DiscreteMeasure) -> Vec<f64> {
        self.snapshots.iter().map(|s| wasserstein1(s, reference)).collect()
    }
}

/// Integrates from `mu0` to time `t_end` with step `h ∈ (0, 1)`; the last
/// step is shortened if `t_end` is not a multiple of `h`.
pub fn evolve(
    model: &CollisionModel,
    mu0: &DiscreteMeasure,
    t_end: f64,
    h: f64,
    scheme: Scheme,
    keep_stride: usize,
) -> Result<Trajectory> {
    evolve_with_reference(model, mu0, t_end, h, scheme, keep_stride, None)
}

/// As [`evolve`], also recording `W1(ψ(t), reference)` every step.
pub fn evolve_with_reference(
    model: &CollisionModel,
    mu0: &DiscreteMeasure,
    t_end: f64,
    h: f64,
    scheme: Scheme,
    keep_stride: usize,
    reference: Option<&DiscreteMeasure>,
) -> Result<Trajectory> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::StepOutOfRange(h));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("T = {t_end} must be > 0")));
    }
    check_initial(mu0)?;
    let r = model.r();
    let stride = keep_stride.max(1);
    let n_steps = ((t_end / h) - 1e-9).ceil().max(1.0) as usize;
    let row = |t: f64, mu: &DiscreteMeasure, ledger: f64| TrajectoryRow {
        t,
        w1_to_ref: reference.map(|x| wasserstein1(mu, x)),
        m1: mu.moment(1.0),
        mr: mu.moment(r),
        error_ledger: ledger,
    };
    let mut traj = Trajectory {
        times: vec![0.0],
        snapshots: vec![mu0.clone()],
        ledgers: vec![0.0],
        rows: vec![row(0.0, mu0, 0.0)],
        scheme,
        h,
        error_ledger: 0.0,
        last: mu0.clone(),
    };
    let mut cur = mu0.clone();
    for k in 1..=n_steps {
        let t_prev = (k - 1) as f64 * h;
        let dt = if k == n_steps { t_end - t_prev } else { h };
        let s = step(model, &cur, dt, scheme)?;
        traj.error_ledger += s.w1_error_bound();
        cur = s.result;
        let t = if k == n_steps { t_end } else { k as f64 * h };
        traj.rows.push(row(t, &cur, traj.error_ledger));
        if k % stride == 0 || k == n_steps {
            traj.times.push(t);
            traj.snapshots.push(cur.clone());
            traj.ledgers.push(traj.error_ledger);
        }
    }
    traj.last = cur;
    Ok(traj)
}

/// `K = (1/r) 2^{1+1/r} (m_r(μ₀) + m_r(μ*))`.
pub fn decay_constant(r: f64, mu0: &DiscreteMeasure, mu_star: &DiscreteMeasure) -> f64 {
    2f64.powf(1.0 + 1.0 / r) * (mu0.moment(r) + mu_star.moment(r)) / r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    /// Least-squares slope of `log W1(ψ(t), μ*)` over the fit window;
    /// `None` when the whole series is within ten ledgers of zero.
    pub slope: Option<f64>,
    /// `−(1 − λ)/r`; `None` when `λ ≥ 1` and the bound is vacuous.
    pub bound_slope: Option<f64>,
    pub k_constant: Option<f64>,
    /// Smallest `C` with `W1(t) − ledger(t) ≤ C e^{t·bound_slope}` on all
    /// kept times.
    pub c_required: Option<f64>,
    pub window_len: usize,
    /// Every kept step satisfies `W1(t_{k+1}) ≤ W1(t_k)` up to the step's
    /// ledger growth and the stationarity defect of μ*.
    pub monotone: bool,
    pub worst_increase: f64,
    /// `monotone` and `c_required ≤ K`; false when λ ≥ 1.
    pub ok: bool,
}

/// Checks exponential approach to `mu_star` along a trajectory.
pub fn decay_check(model: &CollisionModel, traj: &Trajectory, mu_star: &DiscreteMeasure) -> Result<DecayCheck> {
    let r = model.r();
    let lambda = model.contraction_factor();
    let w1 = traj.w1_to(mu_star);

    // stationarity defect of mu_star under the exact operator
    let p = model.apply(mu_star)?;
    let defect = wasserstein1(&p.result, mu_star) + p.w1_error_bound();
    let mut worst_increase = f64::NEG_INFINITY;
    for k in 1..w1.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        let allowance = (traj.ledgers[k] - traj.ledgers[k - 1]) + dt * defect + 1e-12;
        worst_increase = worst_increase.max(w1[k] - w1[k - 1] - allowance);
    }
    let monotone = worst_increase <= 0.0;

    let window: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&w1)
        .zip(&traj.ledgers)
        .filter(|((_, &w), &l)| w > 10.0 * l && w > 1e-12)
        .map(|((&t, &w), _)| (t, w.ln()))
        .collect();
    let trivially_small = w1.iter().zip(&traj.ledgers).all(|(&w, &l)| w <= 10.0 * l + 1e-12);
    let slope = if window.len() >= 3 {
        Some(least_squares_slope(&window))
    } else if trivially_small {
        None
    } else {
        return Err(Error::WindowTooShort(window.len()));
    };

    if lambda >= 1.0 {
        return Ok(DecayCheck {
            slope,
            bound_slope: None,
            k_constant: None,
            c_required: None,
            window_len: window.len(),
            monotone,
            worst_increase,
            ok: false,
        });
    }
    let bound_slope = -(1.0 - lambda) / r;
    let k = decay_constant(r, &traj.snapshots[0], mu_star);
    let c_required = traj
        .times
        .iter()
        .zip(&w1)
        .zip(&traj.ledgers)
        .map(|((&t, &w), &l)| (w - l).max(0.0) * (-bound_slope * t).exp())
        .fold(0.0, f64::max);
    Ok(DecayCheck {
        slope,
        bound_slope: Some(bound_slope),
        k_constant: Some(k),
        c_required: Some(c_required),
        window_len: window.len(),
        monotone,
        worst_increase,
        ok: monotone && c_required <= k,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationCheck {
    pub h: f64,
    /// `W1(ψ_h(T), ψ_ref(T))`, Euler at `h` against the exponential scheme
    /// at the reference step.
    pub measured: f64,
    /// `4 K h (e^{2T} − 1)`.
    pub bound: f64,
    pub k_constant: f64,
    /// Error bounds of both runs.
    pub ledger: f64,
    /// The bound exceeds 2, the largest W1 between two measures of mean 1.
    pub vacuous: bool,
    pub ok: bool,
}

/// Compares the Euler scheme at step `h` with the exponential scheme at
/// `h/16` at time `t_end`.
pub fn discretization_error_check(
    model: &CollisionModel,
    mu0: &DiscreteMeasure,
    mu_star: &DiscreteMeasure,
    t_end: f64,
    h: f64,
) -> Result<DiscretizationCheck> {
    Ok(discretization_sweep(model, mu0, mu_star, t_end, &[h])?.remove(0))
}

/// [`discretization_error_check`] for several steps sharing one reference
/// run at the smallest step divided by 16.
pub fn discretization_sweep(
    model: &CollisionModel,
    mu0: &DiscreteMeasure,
    mu_star: &DiscreteMeasure,
    t_end: f64,
    hs: &[f64],
) -> Result<Vec<DiscretizationCheck>> {
    let h_min = hs.iter().copied().fold(f64::INFINITY, f64::min);
    if h_min.is_nan() || h_min <= 0.0 {
        return Err(Error::StepOutOfRange(h_min));
    }
    let reference = evolve(model, mu0, t_end, h_min / 16.0, Scheme::ExpEuler, usize::MAX)?;
    let k = decay_constant(model.r(), mu0, mu_star);
    hs.iter()
        .map(|&h| {
            let run = evolve(model, mu0, t_end, h, Scheme::Euler, usize::MAX)?;
            let measured = wasserstein1(&run.last, &reference.last);
            let bound = 4.0 * k * h * ((2.0 * t_end).exp() - 1.0);
            let ledger = run.error_ledger + reference.error_ledger;
            Ok(DiscretizationCheck {
                h,
                measured,
                bound,
                k_constant: k,
                ledger,
                vacuous: bound > 2.0,
                ok: measured <= bound + ledger,
            })
        })
        .collect()
}
