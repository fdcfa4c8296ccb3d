//! The collision operator `𝐏 = Σ αᵢ P_{φᵢ} P_{*i}`.
//!
//! Each component convolves the input with itself `i` times (total energy
//! of `i` colliding particles) and then rescales by an independent draw from
//! `φᵢ`. Infinite alpha sequences are given by an analytic power-law tail and
//! truncated to the shortest prefix whose dropped mass is at most
//! `tail_tolerance`; the retained alphas are renormalized, so every
//! component and the mixture still map probability measures with mean 1 to
//! probability measures with mean 1.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{self, grid, Coarsening, DiscreteMeasure, Law, MixingLaw};

pub const DEFAULT_RESOLUTION: usize = 512;
pub const DEFAULT_BUDGET: usize = 4096;
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_R: f64 = 1.5;
const ALPHA_SUM_TOL: f64 = 1e-9;
const MEAN_TOL: f64 = 1e-12;

/// One explicitly listed term `αᵢ P_{φᵢ} P_{*i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntrySpec {
    pub i: usize,
    pub alpha: f64,
    pub phi: Law,
    /// Quantile-midpoint count used when `phi` is continuous.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

/// Mixing-law family for rule-generated indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailFamily {
    /// `φᵢ = uniform(0, 2/i)`
    Uniform,
    /// `φᵢ = δ_{1/i}`
    Dirac,
}

impl TailFamily {
    fn law(self, i: usize) -> Law {
        let inv = 1.0 / i as f64;
        match self {
            TailFamily::Uniform => Law::Uniform { lo: 0.0, hi: 2.0 * inv },
            TailFamily::Dirac => Law::atoms(DiscreteMeasure::dirac(inv)),
        }
    }
}

/// `αᵢ = mass · i^{−exponent} / Σ_{j ≥ from} j^{−exponent}` for `i ≥ from`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRule {
    pub exponent: f64,
    pub from: usize,
    pub mass: f64,
    pub phi: TailFamily,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

impl TailRule {
    fn normalizer(&self) -> f64 {
        hurwitz_tail(self.exponent, self.from)
    }

    fn alpha(&self, i: usize, norm: f64) -> f64 {
        self.mass * (i as f64).powf(-self.exponent) / norm
    }

    /// Alpha mass of indices strictly above `n`.
    fn mass_above(&self, n: usize, norm: f64) -> f64 {
        if n < self.from {
            return self.mass;
        }
        self.mass * hurwitz_tail(self.exponent, n + 1) / norm
    }
}

/// Full description of a collision model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub entries: Vec<EntrySpec>,
    #[serde(default)]
    pub tail_rule: Option<TailRule>,
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
    #[serde(default = "default_budget")]
    pub atom_budget: usize,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_cap")]
    pub hard_cap: usize,
    #[serde(default)]
    pub coarsening: Coarsening,
}

fn default_tail_tolerance() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}
fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_r() -> f64 {
    DEFAULT_R
}
fn default_cap() -> usize {
    measure::HARD_ATOM_CAP
}

impl ModelSpec {
    pub fn new(entries: Vec<EntrySpec>) -> Self {
        Self {
            entries,
            tail_rule: None,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            atom_budget: DEFAULT_BUDGET,
            r: DEFAULT_R,
            hard_cap: measure::HARD_ATOM_CAP,
            coarsening: Coarsening::default(),
        }
    }

    /// Single-term model `Λ = {i}`.
    pub fn single(i: usize, phi: Law) -> Self {
        Self::new(vec![EntrySpec { i, alpha: 1.0, phi, resolution: DEFAULT_RESOLUTION }])
    }

    /// Tjon–Wu: `Λ = {2}`, `φ₂ = uniform(0, 1)`.
    pub fn tjon_wu(resolution: usize) -> Self {
        Self::new(vec![EntrySpec { i: 2, alpha: 1.0, phi: Law::Uniform { lo: 0.0, hi: 1.0 }, resolution }])
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.atom_budget = budget;
        self
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn with_coarsening(mut self, c: Coarsening) -> Self {
        self.coarsening = c;
        self
    }

    pub fn with_tail_rule(mut self, rule: TailRule, tolerance: f64) -> Self {
        self.tail_rule = Some(rule);
        self.tail_tolerance = tolerance;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

/// Outcome of model validation. Errors make the model unusable; warnings
/// and infos are reported alongside a usable model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum Finding {
    EmptyModel,
    ZeroIndex,
    DuplicateIndex {
        i: usize,
    },
    NegativeAlpha {
        i: usize,
        alpha: f64,
    },
    AlphaSum {
        sum: f64,
    },
    MeanMismatch {
        i: usize,
        mean: f64,
        expected: f64,
    },
    InvalidLaw {
        i: usize,
        reason: String,
    },
    ExponentOutOfRange {
        r: f64,
    },
    BadBudget {
        budget: usize,
    },
    BadTolerance {
        tolerance: f64,
    },
    BadTailRule {
        reason: String,
    },
    /// Indices above `truncation_index` were dropped; `tail_mass` is their
    /// total alpha before renormalization.
    TailRetained {
        truncation_index: usize,
        tail_mass: f64,
    },
    /// `m_r(φᵢ) ≥ 1/i`, so the ζ_r contraction factor is not below 1.
    ContractionHypothesis {
        i: usize,
        moment: f64,
        threshold: f64,
    },
}

impl Finding {
    pub fn severity(&self) -> Severity {
        match self {
            Finding::TailRetained { .. } => Severity::Info,
            Finding::ContractionHypothesis { .. } => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::EmptyModel => write!(f, "model has no terms with positive alpha"),
            Finding::ZeroIndex => write!(f, "collision index must be >= 1"),
            Finding::DuplicateIndex { i } => write!(f, "index {i} listed more than once"),
            Finding::NegativeAlpha { i, alpha } => write!(f, "alpha_{i} = {alpha} is negative"),
            Finding::AlphaSum { sum } => write!(f, "alphas sum to {sum}, not 1"),
            Finding::MeanMismatch { i, mean, expected } => {
                write!(f, "m1(phi_{i}) = {mean}, expected {expected}")
            }
            Finding::InvalidLaw { i, reason } => write!(f, "phi_{i}: {reason}"),
            Finding::ExponentOutOfRange { r } => write!(f, "r = {r} outside (1, 2)"),
            Finding::BadBudget { budget } => write!(f, "atom budget {budget} must be >= 1"),
            Finding::BadTolerance { tolerance } => {
                write!(f, "tail tolerance {tolerance} must be in (0, 1)")
            }
            Finding::BadTailRule { reason } => write!(f, "tail rule: {reason}"),
            Finding::TailRetained { truncation_index, tail_mass } => {
                write!(f, "series truncated after index {truncation_index}, dropped alpha mass {tail_mass:e}")
            }
            Finding::ContractionHypothesis { i, moment, threshold } => {
                write!(f, "m_r(phi_{i}) = {moment} is not below 1/i = {threshold}")
            }
        }
    }
}

/// `Σ_{i ≥ a} i^{−s}` for `s > 1`: direct sum of the first terms plus an
/// Euler–Maclaurin remainder.
pub fn hurwitz_tail(s: f64, a: usize) -> f64 {
    let a = a.max(1);
    const DIRECT: usize = 64;
    let mut sum = 0.0;
    for i in a..a + DIRECT {
        sum += (i as f64).powf(-s);
    }
    let m = (a + DIRECT) as f64;
    // Σ_{i ≥ m} f(i) ≈ ∫_m^∞ f + f(m)/2 − f'(m)/12 + f'''(m)/720
    let em = m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s) + s * m.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * m.powf(-s - 3.0) / 720.0;
    sum + em
}

struct Retention {
    explicit: Vec<usize>,
    tail_upto: Option<usize>,
    retained_mass: f64,
    truncation_index: usize,
    dropped: f64,
}

fn retention(spec: &ModelSpec) -> Retention {
    let mut explicit: Vec<&EntrySpec> = spec.entries.iter().filter(|e| e.alpha > 0.0).collect();
    explicit.sort_by_key(|e| e.i);
    let tail_mass = spec.tail_rule.as_ref().map_or(0.0, |t| t.mass);
    let total: f64 = explicit.iter().map(|e| e.alpha).sum::<f64>() + tail_mass;
    let eps = spec.tail_tolerance;

    // remaining mass after keeping the first p explicit terms
    let mut suffix = vec![tail_mass; explicit.len() + 1];
    for p in (0..explicit.len()).rev() {
        suffix[p] = suffix[p + 1] + explicit[p].alpha;
    }
    for p in 1..=explicit.len() {
        if suffix[p] <= eps {
            let kept: Vec<usize> = explicit[..p].iter().map(|e| e.i).collect();
            let retained = total - suffix[p];
            return Retention {
                truncation_index: *kept.last().expect("p >= 1"),
                explicit: kept,
                tail_upto: None,
                retained_mass: retained,
                dropped: suffix[p],
            };
        }
    }
    let kept: Vec<usize> = explicit.iter().map(|e| e.i).collect();
    let Some(rule) = spec.tail_rule.as_ref().filter(|t| t.mass > 0.0) else {
        return Retention {
            truncation_index: kept.last().copied().unwrap_or(0),
            explicit: kept,
            tail_upto: None,
            retained_mass: total,
            dropped: 0.0,
        };
    };
    let norm = rule.normalizer();
    // smallest n ≥ from with mass above n ≤ eps: bracket then bisect
    let from = rule.from.max(1);
    let mut hi = from;
    while rule.mass_above(hi, norm) > eps {
        hi = hi.saturating_mul(2);
        if hi > usize::MAX / 4 {
            break;
        }
    }
    let mut lo = from;
    if rule.mass_above(lo, norm) > eps {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if rule.mass_above(mid, norm) > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    } else {
        hi = lo;
    }
    let dropped = rule.mass_above(hi, norm);
    Retention { explicit: kept, tail_upto: Some(hi), retained_mass: total - dropped, truncation_index: hi, dropped }
}

/// Checks a model description; never fails, returns all findings.
pub fn validate_model(spec: &ModelSpec) -> Vec<Finding> {
    let mut out = Vec::new();
    if !(spec.r > 1.0 && spec.r < 2.0) {
        out.push(Finding::ExponentOutOfRange { r: spec.r });
    }
    if spec.atom_budget == 0 {
        out.push(Finding::BadBudget { budget: spec.atom_budget });
    }
    if !(spec.tail_tolerance > 0.0 && spec.tail_tolerance < 1.0) {
        out.push(Finding::BadTolerance { tolerance: spec.tail_tolerance });
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut sum = 0.0;
    for e in &spec.entries {
        if e.i == 0 {
            out.push(Finding::ZeroIndex);
            continue;
        }
        if !seen.insert(e.i) {
            out.push(Finding::DuplicateIndex { i: e.i });
        }
        if !e.alpha.is_finite() || e.alpha < 0.0 {
            out.push(Finding::NegativeAlpha { i: e.i, alpha: e.alpha });
            continue;
        }
        sum += e.alpha;
        if e.alpha == 0.0 {
            continue;
        }
        if let Err(reason) = check_law(&e.phi, e.resolution) {
            out.push(Finding::InvalidLaw { i: e.i, reason });
            continue;
        }
        let expected = 1.0 / e.i as f64;
        let mean = e.phi.mean();
        if (mean - expected).abs() > MEAN_TOL {
            out.push(Finding::MeanMismatch { i: e.i, mean, expected });
        } else if !e.phi.is_atomic() {
            if let Ok(d) = measure::discretize(&e.phi, e.resolution) {
                let dm = d.moment(1.0);
                if (dm - expected).abs() > MEAN_TOL {
                    out.push(Finding::MeanMismatch { i: e.i, mean: dm, expected });
                }
            }
        }
    }
    if let Some(rule) = &spec.tail_rule {
        let mut bad = Vec::new();
        if !(rule.exponent > 1.0 && rule.exponent.is_finite()) {
            bad.push(format!("exponent {} must exceed 1", rule.exponent));
        }
        if rule.from == 0 {
            bad.push("from must be >= 1".to_string());
        }
        if let Some(&max_i) = seen.iter().next_back() {
            if rule.from <= max_i {
                bad.push(format!("from = {} overlaps explicit index {max_i}", rule.from));
            }
        }
        if !(rule.mass.is_finite() && rule.mass >= 0.0) {
            bad.push(format!("mass {} must be >= 0", rule.mass));
        }
        if rule.resolution == 0 {
            bad.push("resolution must be >= 1".to_string());
        }
        if !bad.is_empty() {
            out.push(Finding::BadTailRule { reason: bad.join(", ") });
        } else {
            sum += rule.mass;
        }
    }
    if (sum - 1.0).abs() > ALPHA_SUM_TOL {
        out.push(Finding::AlphaSum { sum });
    }
    if sum <= 0.0 {
        out.push(Finding::EmptyModel);
    }
    if out.iter().any(|f| f.severity() == Severity::Error) {
        return out;
    }

    let ret = retention(spec);
    if ret.dropped > 0.0 {
        out.push(Finding::TailRetained { truncation_index: ret.truncation_index, tail_mass: ret.dropped });
    }
    // contraction hypothesis m_r(φᵢ) < 1/i on retained explicit terms; the
    // tail families satisfy it for every i ≥ 2 by closed form
    for e in spec.entries.iter().filter(|e| ret.explicit.contains(&e.i)) {
        let moment = e.phi.moment(spec.r);
        let threshold = 1.0 / e.i as f64;
        if moment >= threshold {
            out.push(Finding::ContractionHypothesis { i: e.i, moment, threshold });
        }
    }
    if let (Some(rule), Some(_)) = (&spec.tail_rule, ret.tail_upto) {
        if rule.from == 1 {
            let moment = rule.phi.law(1).moment(spec.r);
            if moment >= 1.0 {
                out.push(Finding::ContractionHypothesis { i: 1, moment, threshold: 1.0 });
            }
        }
    }
    out
}

fn check_law(law: &Law, resolution: usize) -> std::result::Result<(), String> {
    match law {
        Law::Atoms { measure } => {
            if (measure.mass() - 1.0).abs() > ALPHA_SUM_TOL {
                return Err(format!("atomic law has mass {}", measure.mass()));
            }
        }
        Law::Uniform { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && hi > lo) {
                return Err(format!("uniform({lo}, {hi}) needs 0 <= lo < hi"));
            }
        }
        Law::Exponential { rate } => {
            if !(rate.is_finite() && *rate > 0.0) {
                return Err(format!("exponential rate {rate} must be > 0"));
            }
        }
    }
    if resolution == 0 {
        return Err("resolution must be >= 1".into());
    }
    Ok(())
}

/// A retained term of the mixture.
#[derive(Debug)]
pub struct Component {
    pub index: usize,
    /// Renormalized weight.
    pub alpha: f64,
    pub phi: MixingLaw,
    resolution: usize,
    atoms: OnceLock<DiscreteMeasure>,
}

impl Component {
    /// Discretized `φᵢ`, computed on first use.
    pub fn phi_atoms(&self) -> &DiscreteMeasure {
        self.atoms
            .get_or_init(|| measure::discretize(&self.phi.law, self.resolution).expect("validated law discretizes"))
    }
}

/// Result of applying the operator to a measure, with the W1 error bound
/// split into its sources.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplyReceipt {
    pub result: DiscreteMeasure,
    /// Atom-budget coarsening, propagated through later stages.
    pub coarsening_bound: f64,
    /// Distance to the untruncated series from dropping the alpha tail.
    pub truncation_bound: f64,
}

impl ApplyReceipt {
    pub fn w1_error_bound(&self) -> f64 {
        self.coarsening_bound + self.truncation_bound
    }
}

/// A validated collision model ready to apply.
#[derive(Debug)]
pub struct CollisionModel {
    spec: ModelSpec,
    components: Vec<Component>,
    retained_mass: f64,
    dropped_mass: f64,
    truncation_index: usize,
    findings: Vec<Finding>,
}

impl CollisionModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let findings = validate_model(&spec);
        let errors: Vec<Finding> = findings.iter().filter(|f| f.severity() == Severity::Error).cloned().collect();
        if !errors.is_empty() {
            return Err(Error::InvalidModel(errors));
        }
        let ret = retention(&spec);
        let s = ret.retained_mass;
        let mut components = Vec::new();
        let mut entries: Vec<&EntrySpec> = spec.entries.iter().filter(|e| ret.explicit.contains(&e.i)).collect();
        entries.sort_by_key(|e| e.i);
        for e in entries {
            components.push(Component {
                index: e.i,
                alpha: e.alpha / s,
                phi: MixingLaw::new(e.phi.clone(), e.i),
                resolution: e.resolution,
                atoms: OnceLock::new(),
            });
        }
        if let (Some(rule), Some(upto)) = (&spec.tail_rule, ret.tail_upto) {
            let norm = rule.normalizer();
            for i in rule.from.max(1)..=upto {
                components.push(Component {
                    index: i,
                    alpha: rule.alpha(i, norm) / s,
                    phi: MixingLaw::new(rule.phi.law(i), i),
                    resolution: rule.resolution,
                    atoms: OnceLock::new(),
                });
            }
        }
        Ok(Self {
            spec,
            components,
            retained_mass: s,
            dropped_mass: ret.dropped,
            truncation_index: ret.truncation_index,
            findings,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Non-error findings from validation.
    pub fn findings(&self) -> &[Finding] {
        &self.findings
    }

    /// Retained indices with positive alpha (the set Λ after truncation).
    pub fn lambda_set(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.index).collect()
    }

    pub fn component(&self, i: usize) -> Option<&Component> {
        self.components.iter().find(|c| c.index == i)
    }

    pub fn retained_mass(&self) -> f64 {
        self.retained_mass
    }

    pub fn dropped_mass(&self) -> f64 {
        self.dropped_mass
    }

    pub fn truncation_index(&self) -> usize {
        self.truncation_index
    }

    pub fn budget(&self) -> usize {
        self.spec.atom_budget
    }

    pub fn r(&self) -> f64 {
        self.spec.r
    }

    /// `λ = Σ αᵢ m_r(φᵢ) i` with closed-form moments of the exact laws.
    pub fn contraction_factor(&self) -> f64 {
        self.contraction_factor_at(self.spec.r)
    }

    pub fn contraction_factor_at(&self, r: f64) -> f64 {
        self.components.iter().map(|c| c.alpha * c.phi.law.moment(r) * c.index as f64).sum()
    }

    /// `λ` evaluated on the discretized mixing laws the operator uses.
    pub fn discretized_contraction_factor(&self, r: f64) -> f64 {
        self.components.iter().map(|c| c.alpha * c.phi_atoms().moment(r) * c.index as f64).sum()
    }

    /// Right-hand side of `m_r(𝐏μ) ≤ Σ αᵢ m_r(φᵢ) iʳ m_r(μ)`.
    pub fn moment_growth_bound(&self, r: f64, mr_mu: f64) -> f64 {
        self.components.iter().map(|c| c.alpha * c.phi.law.moment(r) * (c.index as f64).powf(r)).sum::<f64>() * mr_mu
    }

    /// Same bound with the discretized laws.
    pub fn discretized_moment_growth_bound(&self, r: f64, mr_mu: f64) -> f64 {
        self.components.iter().map(|c| c.alpha * c.phi_atoms().moment(r) * (c.index as f64).powf(r)).sum::<f64>()
            * mr_mu
    }

    fn scale_component(&self, c: &Component, power: &DiscreteMeasure, conv_bound: f64) -> Result<ApplyReceipt> {
        let phi = c.phi_atoms();
        let scaled =
            grid::scale_product_coarse(phi, power, self.spec.atom_budget, &self.spec.coarsening, self.spec.hard_cap)?;
        Ok(ApplyReceipt {
            result: scaled.result,
            coarsening_bound: phi.moment(1.0) * conv_bound + scaled.w1_error_bound,
            truncation_bound: 0.0,
        })
    }

    fn run_component(&self, c: &Component, mu: &DiscreteMeasure) -> Result<ApplyReceipt> {
        let spec = &self.spec;
        let (power, conv_bound) =
            measure::convolve_power_with(mu, c.index, spec.atom_budget, &spec.coarsening, spec.hard_cap)?;
        self.scale_component(c, &power, conv_bound)
    }

    /// All components along one chain of convolution powers, so the cost is
    /// `max i − 1` folds rather than `Σ (i − 1)`. Matches [`Self::run_component`]
    /// bit for bit.
    fn run_all(&self, mu: &DiscreteMeasure) -> Result<Vec<ApplyReceipt>> {
        let spec = &self.spec;
        let mut acc = mu.clone();
        let mut bound = 0.0;
        let mut k = 1;
        let mut out = Vec::with_capacity(self.components.len());
        // components are sorted by index
        for c in &self.components {
            while k < c.index {
                let r = grid::convolve_coarse(mu, &acc, spec.atom_budget, &spec.coarsening, spec.hard_cap)?;
                bound += r.w1_error_bound;
                acc = r.result;
                k += 1;
            }
            out.push(self.scale_component(c, &acc, bound)?);
        }
        Ok(out)
    }

    /// `𝐏ᵢμ = P_{φᵢ} P_{*i} μ` for a retained index.
    pub fn apply_component(&self, i: usize, mu: &DiscreteMeasure) -> Result<ApplyReceipt> {
        let c = self.component(i).ok_or(Error::UnknownComponent(i))?;
        self.run_component(c, mu)
    }

    /// `𝐏μ`: components evaluated along a shared power chain, mixed in index order,
    /// coarsened once to the atom budget and rescaled to unit mass.
    pub fn apply(&self, mu: &DiscreteMeasure) -> Result<ApplyReceipt> {
        let parts = self.run_all(mu)?;
        let weighted: Vec<(f64, &DiscreteMeasure)> =
            self.components.iter().zip(&parts).map(|(c, p)| (c.alpha, &p.result)).collect();
        let mixed = if weighted.len() == 1 { parts[0].result.clone() } else { measure::mixture(&weighted) };
        let inner: f64 = self.components.iter().zip(&parts).map(|(c, p)| c.alpha * p.coarsening_bound).sum();
        let final_step = measure::coarsen_with(&mixed, self.spec.atom_budget, &self.spec.coarsening);
        // mass(𝐏μ) = mass(μ)² for the raw operator, so rounding errors in the
        // total mass double every iteration unless removed here
        let mass = final_step.result.mass();
        let result = if mass == 1.0 { final_step.result } else { final_step.result.normalized() };
        let renorm = (1.0 - 1.0 / mass).abs() * result.moment(1.0);
        // dropped components also map into measures with the input's mean,
        // so the mixture moves by at most dropped·(m1(𝐏_kept μ) + m1(𝐏_tail μ))
        let truncation = 2.0 * self.dropped_mass * mu.moment(1.0);
        Ok(ApplyReceipt {
            result,
            coarsening_bound: inner + final_step.w1_error_bound + renorm,
            truncation_bound: truncation,
        })
    }
}

pub fn apply(model: &CollisionModel, mu: &DiscreteMeasure) -> Result<ApplyReceipt> {
    model.apply(mu)
}

pub fn apply_component(model: &CollisionModel, i: usize, mu: &DiscreteMeasure) -> Result<ApplyReceipt> {
    model.apply_component(i, mu)
}

pub fn contraction_factor(model: &CollisionModel) -> f64 {
    model.contraction_factor()
}

pub fn moment_growth_bound(model: &CollisionModel, r: f64, mr_mu: f64) -> f64 {
    model.moment_growth_bound(r, mr_mu)
}
