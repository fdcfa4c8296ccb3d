//! Executes a parsed scenario and writes its artifacts.
//!
//! `report.json` holds numbers only (no timings, no thread counts), so it is
//! byte-identical across reruns with the same scenario and seed. Timings go
//! to `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use kineq_core::dynamics::{self, DecayCheck, Scheme, Trajectory};
use kineq_core::measure::io::write_csv;
use kineq_core::metrics::{self, fortet_mourier, kr_potential, wasserstein1, MetricReport};
use kineq_core::sampler::{self, RngStream};
use kineq_core::solver::{self, FixedPointReport, IterateOptions, Moments, SupportDiagnostics};
use kineq_core::{CollisionModel, DiscreteMeasure, Finding};
use serde::Serialize;

use crate::scenario::{Reference, RunSpec, Scenario};

/// Iteration settings for computing an evolve reference.
const REFERENCE_MAX_ITER: usize = 200;
const REFERENCE_W1_TOL: f64 = 1e-6;
const CHARFN_T_MAX: f64 = 10.0;
const CHARFN_POINTS: usize = 41;
const SUPPORT_GRID_N: usize = 64;

#[derive(Debug)]
pub enum RunError {
    /// Bad input detected at run time; exit code 1.
    Config(String),
    /// The computation failed or a numerical check did not hold; exit code 2.
    Numerical(String),
    Io(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<kineq_core::Error> for RunError {
    fn from(e: kineq_core::Error) -> Self {
        match e {
            kineq_core::Error::Io(m) => RunError::Io(m),
            kineq_core::Error::InvalidModel(_)
            | kineq_core::Error::InvalidInitial { .. }
            | kineq_core::Error::StepOutOfRange(_)
            | kineq_core::Error::InvalidArgument(_) => RunError::Config(e.to_string()),
            other => RunError::Numerical(other.to_string()),
        }
    }
}

/// What a finished run produced.
#[derive(Debug)]
pub struct RunOutcome {
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    /// Numerical checks that did not hold; nonempty means exit code 2.
    pub failures: Vec<String>,
}

struct Out<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Out<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn measure(&mut self, name: &str, mu: &DiscreteMeasure) -> Result<(), RunError> {
        let f = fs::File::create(self.path(name))?;
        write_csv(mu, std::io::BufWriter::new(f))?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<(), RunError> {
        let s = serde_json::to_string_pretty(v).map_err(|e| RunError::Io(e.to_string()))?;
        fs::write(self.path(name), s + "\n")?;
        Ok(())
    }

    fn text(&mut self, name: &str, s: &str) -> Result<(), RunError> {
        fs::write(self.path(name), s)?;
        Ok(())
    }
}

fn snapshot_name(k: usize) -> String {
    format!("snapshot_{k:04}.csv")
}

/// Shortest round-trip formatting; `""` for missing values.
fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

#[derive(Serialize)]
struct ModelSummary {
    lambda: f64,
    discretized_lambda: f64,
    truncation_index: usize,
    dropped_mass: f64,
    findings: Vec<Finding>,
}

fn model_summary(model: &CollisionModel) -> ModelSummary {
    ModelSummary {
        lambda: model.contraction_factor(),
        discretized_lambda: model.discretized_contraction_factor(model.r()),
        truncation_index: model.truncation_index(),
        dropped_mass: model.dropped_mass(),
        findings: model.findings().to_vec(),
    }
}

#[derive(Serialize)]
struct Snapshot {
    index: usize,
    t: f64,
    error_ledger: f64,
    file: String,
}

#[derive(Serialize)]
struct FixpointReport {
    kind: &'static str,
    model: ModelSummary,
    options: IterateOptions,
    converged: bool,
    collapse_detected: bool,
    n_iterations: usize,
    error_ledger: f64,
    w1_gaps: Vec<f64>,
    zeta_upper_gaps: Vec<Option<f64>>,
    step_bounds: Vec<f64>,
    moments: Vec<Moments>,
    support: SupportDiagnostics,
    charfn_residual: f64,
    snapshots: Vec<Snapshot>,
}

#[derive(Serialize)]
struct ReferenceSummary {
    source: &'static str,
    fixpoint_converged: Option<bool>,
    fixpoint_iterations: Option<usize>,
    file: String,
}

#[derive(Serialize)]
struct EvolveReport {
    kind: &'static str,
    model: ModelSummary,
    scheme: Scheme,
    h: f64,
    t_end: f64,
    n_steps: usize,
    error_ledger: f64,
    final_moments: Moments,
    snapshots: Vec<Snapshot>,
    reference: Option<ReferenceSummary>,
    decay: Option<DecayCheck>,
    decay_error: Option<String>,
}

#[derive(Serialize)]
struct MetricsRunReport {
    kind: &'static str,
    other_source: &'static str,
    metrics: MetricReport,
    kr_value: f64,
    mu_moments: Moments,
    nu_moments: Moments,
}

#[derive(Serialize)]
struct McReport {
    kind: &'static str,
    n_draws: usize,
    seed: u64,
    stream_id: u64,
    w1_empirical_exact: f64,
    fm_empirical_exact: f64,
    exact_error_bound: f64,
    empirical_mean: f64,
    empirical_atoms: usize,
}

/// Runs the scenario, writing artifacts into `dir` (which must exist).
pub fn run_scenario(s: &Scenario, dir: &Path, seed: u64) -> Result<RunOutcome, RunError> {
    let model = CollisionModel::new(s.model.clone())?;
    let mut out = Out { dir, files: Vec::new() };
    let mut failures = Vec::new();
    match &s.run {
        RunSpec::Fixpoint(opts) => run_fixpoint(&model, &s.initial, opts, &mut out, &mut failures)?,
        RunSpec::Evolve { t_end, h, scheme, stride, reference } => {
            run_evolve(&model, &s.initial, *t_end, *h, *scheme, *stride, reference, &mut out, &mut failures)?
        }
        RunSpec::Metrics { other, r, grid_n } => {
            run_metrics(&model, &s.initial, other.as_ref(), *r, *grid_n, &mut out, &mut failures)?
        }
        RunSpec::McCompare { n_draws } => run_mc(&model, &s.initial, *n_draws, seed, &mut out)?,
    }
    Ok(RunOutcome { files: out.files, failures })
}

fn run_fixpoint(
    model: &CollisionModel,
    mu0: &DiscreteMeasure,
    opts: &IterateOptions,
    out: &mut Out,
    failures: &mut Vec<String>,
) -> Result<(), RunError> {
    let rep: FixedPointReport = solver::iterate(model, mu0, opts)?;
    let mut snapshots = Vec::new();
    let mut ledger = 0.0;
    let mut bounds = rep.step_bounds.iter();
    let mut done = 0;
    for (n, mu) in &rep.iterates_kept {
        for b in bounds.by_ref().take(n - done) {
            ledger += b;
        }
        done = *n;
        let file = snapshot_name(*n);
        out.measure(&file, mu)?;
        snapshots.push(Snapshot { index: *n, t: *n as f64, error_ledger: ledger, file });
    }

    let mut trace = String::from("n,w1_gap,zeta_upper_gap,m1,mr,m2,step_bound\n");
    for k in 0..rep.w1_gaps.len() {
        let m = rep.moments[k + 1];
        trace.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            k + 1,
            cell(Some(rep.w1_gaps[k])),
            cell(rep.zeta_upper_gaps[k]),
            cell(Some(m.m1)),
            cell(Some(m.mr)),
            cell(Some(m.m2)),
            cell(Some(rep.step_bounds[k])),
        ));
    }
    out.text("trace.csv", &trace)?;

    let t_grid: Vec<f64> = (0..CHARFN_POINTS).map(|k| CHARFN_T_MAX * k as f64 / (CHARFN_POINTS - 1) as f64).collect();
    let report = FixpointReport {
        kind: "fixpoint",
        model: model_summary(model),
        options: opts.clone(),
        converged: rep.converged,
        collapse_detected: rep.collapse_detected,
        n_iterations: rep.n_iterations,
        error_ledger: rep.error_ledger,
        support: solver::support_diagnostics(&rep.last, SUPPORT_GRID_N),
        charfn_residual: solver::charfn_residual(model, &rep.last, &t_grid),
        w1_gaps: rep.w1_gaps,
        zeta_upper_gaps: rep.zeta_upper_gaps,
        step_bounds: rep.step_bounds,
        moments: rep.moments,
        snapshots,
    };
    if !report.converged && !report.collapse_detected {
        failures.push(format!("no convergence within {} iterations", opts.max_iter));
    }
    out.json("report.json", &report)
}

#[allow(clippy::too_many_arguments)]
fn run_evolve(
    model: &CollisionModel,
    mu0: &DiscreteMeasure,
    t_end: f64,
    h: f64,
    scheme: Scheme,
    stride: usize,
    reference: &Reference,
    out: &mut Out,
    failures: &mut Vec<String>,
) -> Result<(), RunError> {
    let (ref_measure, mut ref_summary) = match reference {
        Reference::None => (None, None),
        Reference::Given(m) => (
            Some(m.clone()),
            Some(ReferenceSummary {
                source: "given",
                fixpoint_converged: None,
                fixpoint_iterations: None,
                file: String::new(),
            }),
        ),
        Reference::Fixpoint => {
            let opts = IterateOptions { max_iter: REFERENCE_MAX_ITER, w1_tol: REFERENCE_W1_TOL, ..Default::default() };
            let rep = solver::iterate(model, mu0, &opts)?;
            let summary = ReferenceSummary {
                source: "fixpoint",
                fixpoint_converged: Some(rep.converged),
                fixpoint_iterations: Some(rep.n_iterations),
                file: String::new(),
            };
            (Some(rep.last), Some(summary))
        }
    };
    if let (Some(m), Some(sum)) = (&ref_measure, ref_summary.as_mut()) {
        sum.file = "reference.csv".into();
        out.measure("reference.csv", m)?;
    }

    let traj: Trajectory = dynamics::evolve_with_reference(model, mu0, t_end, h, scheme, stride, ref_measure.as_ref())?;
    let mut trace = String::from("t,w1_to_ref,m1,mr,error_ledger\n");
    for row in &traj.rows {
        trace.push_str(&format!(
            "{},{},{},{},{}\n",
            cell(Some(row.t)),
            cell(row.w1_to_ref),
            cell(Some(row.m1)),
            cell(Some(row.mr)),
            cell(Some(row.error_ledger)),
        ));
    }
    out.text("trace.csv", &trace)?;
    let mut snapshots = Vec::new();
    for (k, mu) in traj.snapshots.iter().enumerate() {
        let file = snapshot_name(k);
        out.measure(&file, mu)?;
        snapshots.push(Snapshot { index: k, t: traj.times[k], error_ledger: traj.ledgers[k], file });
    }

    let (decay, decay_error) = match &ref_measure {
        None => (None, None),
        Some(star) => match dynamics::decay_check(model, &traj, star) {
            Ok(d) => (Some(d), None),
            Err(e @ kineq_core::Error::WindowTooShort(_)) => (None, Some(e.to_string())),
            Err(e) => return Err(e.into()),
        },
    };
    if let Some(d) = &decay {
        if !d.monotone {
            failures.push(format!("W1 to reference increased by {:e} beyond the ledger", d.worst_increase));
        }
    }
    let report = EvolveReport {
        kind: "evolve",
        model: model_summary(model),
        scheme,
        h,
        t_end,
        n_steps: traj.rows.len() - 1,
        error_ledger: traj.error_ledger,
        final_moments: Moments::of(&traj.last, model.r()),
        snapshots,
        reference: ref_summary,
        decay,
        decay_error,
    };
    out.json("report.json", &report)
}

fn run_metrics(
    model: &CollisionModel,
    mu: &DiscreteMeasure,
    other: Option<&DiscreteMeasure>,
    r: f64,
    grid_n: usize,
    out: &mut Out,
    failures: &mut Vec<String>,
) -> Result<(), RunError> {
    let (nu, source) = match other {
        Some(m) => (m.clone(), "given"),
        None => (model.apply(mu)?.result, "operator_image"),
    };
    let m = metrics::metric_report(mu, &nu, r, grid_n)?;
    if m.rio_ok == Some(false) {
        failures.push("W1 exceeds the bound from the Zolotarev upper estimate".into());
    }
    if let Some(z) = &m.zeta {
        if !(z.lower <= z.estimate && z.estimate <= z.upper) {
            failures.push(format!("Zolotarev sandwich out of order: {} {} {}", z.lower, z.estimate, z.upper));
        }
    }
    let (_, kr_value) = kr_potential(mu, &nu);
    out.measure("other.csv", &nu)?;
    let report = MetricsRunReport {
        kind: "metrics",
        other_source: source,
        metrics: m,
        kr_value,
        mu_moments: Moments::of(mu, r),
        nu_moments: Moments::of(&nu, r),
    };
    out.json("report.json", &report)
}

fn run_mc(
    model: &CollisionModel,
    mu: &DiscreteMeasure,
    n_draws: usize,
    seed: u64,
    out: &mut Out,
) -> Result<(), RunError> {
    let exact = model.apply(mu)?;
    let rng = RngStream::new(seed, 0);
    let emp = sampler::empirical_apply(model, mu, n_draws, &rng)?;
    out.measure("exact.csv", &exact.result)?;
    out.measure("empirical.csv", &emp)?;
    let report = McReport {
        kind: "mc-compare",
        n_draws,
        seed,
        stream_id: rng.stream_id(),
        w1_empirical_exact: wasserstein1(&emp, &exact.result),
        fm_empirical_exact: fortet_mourier(&emp, &exact.result),
        exact_error_bound: exact.w1_error_bound(),
        empirical_mean: emp.moment(1.0),
        empirical_atoms: emp.len(),
    };
    out.json("report.json", &report)
}
