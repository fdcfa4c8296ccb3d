//! Scenario files: TOML with one model, one initial measure and one run.
//!
//! ```toml
//! seed = 7
//!
//! [model]
//! atom_budget = 4096
//! r = 1.5
//!
//! [[model.entries]]
//! i = 2
//! alpha = 1.0
//! phi = { kind = "uniform", params = [0.0, 1.0], n = 512 }
//!
//! [initial]
//! kind = "dirac"
//! params = [1.0]
//!
//! [run]
//! kind = "fixpoint"
//! max_iter = 60
//! ```

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use kineq_core::collision::{self, EntrySpec, Severity, TailFamily, TailRule};
use kineq_core::dynamics::Scheme;
use kineq_core::measure::{self, GridConfig};
use kineq_core::solver::{self, IterateOptions};
use kineq_core::{Coarsening, DiscreteMeasure, Finding, Law, ModelSpec};
use serde::{Deserialize, Serialize};
use toml::{Spanned, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Syntax,
    UnknownKey,
    Range,
    ModelInvalid,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Syntax => "syntax error",
            ErrorKind::UnknownKey => "unknown key",
            ErrorKind::Range => "range error",
            ErrorKind::ModelInvalid => "invalid model",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioError {
    pub kind: ErrorKind,
    /// 1-based line in the scenario text.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.kind, self.message),
            None => write!(f, "{}: {}", self.kind, self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Fixpoint,
    Evolve,
    Metrics,
    McCompare,
}

impl RunKind {
    pub fn name(self) -> &'static str {
        match self {
            RunKind::Fixpoint => "fixpoint",
            RunKind::Evolve => "evolve",
            RunKind::Metrics => "metrics",
            RunKind::McCompare => "mc-compare",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fixpoint" => RunKind::Fixpoint,
            "evolve" => RunKind::Evolve,
            "metrics" => RunKind::Metrics,
            "mc-compare" | "mc_compare" => RunKind::McCompare,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    None,
    /// Fixed point iterated from the initial measure.
    Fixpoint,
    Given(DiscreteMeasure),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunSpec {
    Fixpoint(IterateOptions),
    Evolve {
        t_end: f64,
        h: f64,
        scheme: Scheme,
        stride: usize,
        reference: Reference,
    },
    /// Distances from the initial measure to `other`, or to its image under
    /// the operator when `other` is absent.
    Metrics {
        other: Option<DiscreteMeasure>,
        r: f64,
        grid_n: usize,
    },
    McCompare {
        n_draws: usize,
    },
}

impl RunSpec {
    pub fn kind(&self) -> RunKind {
        match self {
            RunSpec::Fixpoint(_) => RunKind::Fixpoint,
            RunSpec::Evolve { .. } => RunKind::Evolve,
            RunSpec::Metrics { .. } => RunKind::Metrics,
            RunSpec::McCompare { .. } => RunKind::McCompare,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: ModelSpec,
    pub initial: DiscreteMeasure,
    pub run: RunSpec,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Non-fatal validation findings.
    pub findings: Vec<Finding>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    seed: Option<Spanned<i64>>,
    output_dir: Option<String>,
    model: Spanned<RawModel>,
    initial: Spanned<RawMeasure>,
    run: Spanned<RawRun>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default)]
    entries: Vec<Spanned<RawEntry>>,
    tail_rule: Option<Spanned<RawTailRule>>,
    tail_tolerance: Option<Spanned<f64>>,
    atom_budget: Option<Spanned<i64>>,
    r: Option<Spanned<f64>>,
    coarsening: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    i: Spanned<i64>,
    alpha: f64,
    phi: Spanned<RawMeasure>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTailRule {
    exponent: f64,
    from: Spanned<i64>,
    mass: f64,
    family: Spanned<String>,
    n: Option<Spanned<i64>>,
}

/// A law or measure: `kind` plus `params`, and `n` for continuous kinds.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    kind: Spanned<String>,
    params: Option<Spanned<Value>>,
    n: Option<Spanned<i64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    kind: Option<Spanned<String>>,
    max_iter: Option<Spanned<i64>>,
    w1_tol: Option<Spanned<f64>>,
    stride: Option<Spanned<i64>>,
    collapse_threshold: Option<Spanned<f64>>,
    #[serde(rename = "T")]
    t_end: Option<Spanned<f64>>,
    h: Option<Spanned<f64>>,
    scheme: Option<Spanned<String>>,
    reference: Option<Spanned<Value>>,
    other: Option<Spanned<RawMeasure>>,
    r: Option<Spanned<f64>>,
    grid_n: Option<Spanned<i64>>,
    n_draws: Option<Spanned<i64>>,
}

struct Ctx<'a> {
    text: &'a str,
    errors: Vec<ScenarioError>,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].matches('\n').count() + 1
    }

    fn push(&mut self, kind: ErrorKind, span: Option<Range<usize>>, message: impl Into<String>) {
        let line = span.map(|s| self.line(s));
        self.errors.push(ScenarioError { kind, line, message: message.into() });
    }

    fn range<T>(&mut self, v: &Spanned<T>, message: String) {
        self.push(ErrorKind::Range, Some(v.span()), message);
    }

    fn positive_int(&mut self, v: &Option<Spanned<i64>>, key: &str, default: usize) -> usize {
        match v {
            None => default,
            Some(s) if *s.get_ref() >= 1 => *s.get_ref() as usize,
            Some(s) => {
                self.range(s, format!("{key} = {} must be >= 1", s.get_ref()));
                default
            }
        }
    }
}

/// Parses and validates a scenario. All problems found are returned, each
/// with the line it refers to where one exists.
pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<ScenarioError>> {
    let mut cx = Ctx { text, errors: Vec::new() };
    let raw: RawScenario = match toml::from_str(text) {
        Ok(r) => r,
        Err(e) => {
            let kind = if e.message().contains("unknown field") { ErrorKind::UnknownKey } else { ErrorKind::Syntax };
            cx.push(kind, e.span(), e.message().trim().to_string());
            return Err(cx.errors);
        }
    };

    let seed = match &raw.seed {
        Some(s) if *s.get_ref() < 0 => {
            cx.range(s, "seed must be a nonnegative integer".into());
            None
        }
        Some(s) => Some(*s.get_ref() as u64),
        None => None,
    };
    let (model, findings) = build_model(&mut cx, &raw.model);
    let initial = build_measure(&mut cx, &raw.initial, "initial", measure_default_n());
    let run = build_run(&mut cx, &raw.run, model.r);

    if let (Some(mu), Some(run)) = (&initial, &run) {
        if run.kind() != RunKind::Metrics {
            if let Err(e) = solver::check_initial(mu) {
                cx.range(&raw.initial, e.to_string());
            }
        }
    }
    if !cx.errors.is_empty() {
        return Err(cx.errors);
    }
    Ok(Scenario {
        model,
        initial: initial.expect("no errors"),
        run: run.expect("no errors"),
        output_dir: raw.output_dir.map(PathBuf::from),
        seed,
        findings,
    })
}

fn measure_default_n() -> usize {
    collision::DEFAULT_RESOLUTION
}

fn build_model(cx: &mut Ctx, raw: &Spanned<RawModel>) -> (ModelSpec, Vec<Finding>) {
    let m = raw.get_ref();
    let mut entries = Vec::new();
    let mut lines: Vec<(usize, Range<usize>)> = Vec::new();
    for e in &m.entries {
        let re = e.get_ref();
        let i = *re.i.get_ref();
        if i < 0 {
            cx.range(&re.i, format!("index i = {i} must be >= 1"));
            continue;
        }
        let i = i as usize;
        if lines.iter().any(|(j, _)| *j == i) {
            cx.push(ErrorKind::UnknownKey, Some(re.i.span()), format!("index i = {i} is already defined"));
            continue;
        }
        lines.push((i, e.span()));
        let Some((law, n)) = build_law(cx, &re.phi, &format!("phi_{i}"), collision::DEFAULT_RESOLUTION) else {
            continue;
        };
        entries.push(EntrySpec { i, alpha: re.alpha, phi: law, resolution: n });
    }

    let mut spec = ModelSpec::new(entries);
    if let Some(t) = &m.tail_tolerance {
        spec.tail_tolerance = *t.get_ref();
    }
    if let Some(b) = &m.atom_budget {
        spec.atom_budget = cx.positive_int(&Some(b.clone()), "atom_budget", spec.atom_budget);
    }
    if let Some(r) = &m.r {
        spec.r = *r.get_ref();
    }
    if let Some(c) = &m.coarsening {
        spec.coarsening = match c.get_ref().as_str() {
            "grid" => Coarsening::Grid(GridConfig::default()),
            "barycenter" => Coarsening::Barycenter,
            other => {
                cx.range(c, format!("coarsening `{other}` is not one of grid, barycenter"));
                Coarsening::default()
            }
        };
    }
    if let Some(t) = &m.tail_rule {
        let rt = t.get_ref();
        let family = match rt.family.get_ref().as_str() {
            "uniform" => Some(TailFamily::Uniform),
            "dirac" => Some(TailFamily::Dirac),
            other => {
                cx.range(&rt.family, format!("tail family `{other}` is not one of uniform, dirac"));
                None
            }
        };
        let from = cx.positive_int(&Some(rt.from.clone()), "from", 1);
        let n = cx.positive_int(&rt.n, "n", collision::DEFAULT_RESOLUTION);
        if let Some(phi) = family {
            spec.tail_rule = Some(TailRule { exponent: rt.exponent, from, mass: rt.mass, phi, resolution: n });
        }
    }

    let mut findings = Vec::new();
    for f in collision::validate_model(&spec) {
        if f.severity() != Severity::Error {
            findings.push(f);
            continue;
        }
        let span = match &f {
            Finding::NegativeAlpha { i, .. } | Finding::MeanMismatch { i, .. } | Finding::InvalidLaw { i, .. } => {
                lines.iter().find(|(j, _)| j == i).map(|(_, s)| s.clone())
            }
            Finding::ExponentOutOfRange { .. } => m.r.as_ref().map(|r| r.span()),
            Finding::BadTolerance { .. } => m.tail_tolerance.as_ref().map(|t| t.span()),
            Finding::BadTailRule { .. } => m.tail_rule.as_ref().map(|t| t.span()),
            _ => None,
        }
        .unwrap_or(raw.span());
        cx.push(ErrorKind::ModelInvalid, Some(span), f.to_string());
    }
    (spec, findings)
}

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(k) => Some(*k as f64),
        _ => None,
    }
}

/// Flat list of numbers from a scalar or array.
fn numbers(v: &Value) -> Option<Vec<f64>> {
    match v {
        Value::Array(a) => a.iter().map(num).collect(),
        other => num(other).map(|x| vec![x]),
    }
}

/// `[[x, w], ...]`
fn pairs(v: &Value) -> Option<(Vec<f64>, Vec<f64>)> {
    let Value::Array(a) = v else { return None };
    let mut locs = Vec::with_capacity(a.len());
    let mut ws = Vec::with_capacity(a.len());
    for p in a {
        let xy = numbers(p)?;
        if xy.len() != 2 {
            return None;
        }
        locs.push(xy[0]);
        ws.push(xy[1]);
    }
    Some((locs, ws))
}

/// Builds a law and the resolution its discretization uses.
fn build_law(cx: &mut Ctx, raw: &Spanned<RawMeasure>, what: &str, default_n: usize) -> Option<(Law, usize)> {
    let r = raw.get_ref();
    let n = cx.positive_int(&r.n, "n", default_n);
    let kind = r.kind.get_ref().as_str();
    let Some(params) = &r.params else {
        cx.push(ErrorKind::Syntax, Some(raw.span()), format!("{what}: missing params for kind `{kind}`"));
        return None;
    };
    let bad = |cx: &mut Ctx, expect: &str| {
        cx.range(params, format!("{what}: kind `{kind}` expects params {expect}"));
        None
    };
    let law = match kind {
        "dirac" => match numbers(params.get_ref()).as_deref() {
            Some(&[x]) if x >= 0.0 && x.is_finite() => Law::atoms(DiscreteMeasure::dirac(x)),
            _ => return bad(cx, "[x] with x >= 0"),
        },
        "atoms" => match pairs(params.get_ref()) {
            Some((l, w)) => match DiscreteMeasure::new(&l, &w) {
                Ok(m) => Law::atoms(m),
                Err(e) => {
                    cx.range(params, format!("{what}: {e}"));
                    return None;
                }
            },
            None => return bad(cx, "[[location, weight], ...]"),
        },
        "uniform" => match numbers(params.get_ref()).as_deref() {
            Some(&[lo, hi]) => match Law::uniform(lo, hi) {
                Ok(l) => l,
                Err(e) => {
                    cx.range(params, format!("{what}: {e}"));
                    return None;
                }
            },
            _ => return bad(cx, "[lo, hi]"),
        },
        "exponential" => match numbers(params.get_ref()).as_deref() {
            Some(&[rate]) => match Law::exponential(rate) {
                Ok(l) => l,
                Err(e) => {
                    cx.range(params, format!("{what}: {e}"));
                    return None;
                }
            },
            _ => return bad(cx, "[rate]"),
        },
        other => {
            cx.range(&r.kind, format!("{what}: kind `{other}` is not one of dirac, atoms, uniform, exponential"));
            return None;
        }
    };
    Some((law, n))
}

/// A concrete measure; continuous kinds are discretized at `n` quantile
/// midpoints.
fn build_measure(cx: &mut Ctx, raw: &Spanned<RawMeasure>, what: &str, default_n: usize) -> Option<DiscreteMeasure> {
    let (law, n) = build_law(cx, raw, what, default_n)?;
    match measure::discretize(&law, n) {
        Ok(m) => Some(m),
        Err(e) => {
            cx.range(raw, format!("{what}: {e}"));
            None
        }
    }
}

fn build_run(cx: &mut Ctx, raw: &Spanned<RawRun>, model_r: f64) -> Option<RunSpec> {
    let r = raw.get_ref();
    let Some(kind_s) = &r.kind else {
        cx.push(ErrorKind::Syntax, Some(raw.span()), "run.kind is required");
        return None;
    };
    let Some(kind) = RunKind::parse(kind_s.get_ref()) else {
        cx.range(
            kind_s,
            format!("run kind `{}` is not one of fixpoint, evolve, metrics, mc-compare", kind_s.get_ref()),
        );
        return None;
    };

    let allowed: &[&str] = match kind {
        RunKind::Fixpoint => &["max_iter", "w1_tol", "stride", "collapse_threshold"],
        RunKind::Evolve => &["T", "h", "scheme", "stride", "reference"],
        RunKind::Metrics => &["other", "r", "grid_n"],
        RunKind::McCompare => &["n_draws"],
    };
    let present: [(&str, Option<Range<usize>>); 13] = [
        ("max_iter", r.max_iter.as_ref().map(|v| v.span())),
        ("w1_tol", r.w1_tol.as_ref().map(|v| v.span())),
        ("stride", r.stride.as_ref().map(|v| v.span())),
        ("collapse_threshold", r.collapse_threshold.as_ref().map(|v| v.span())),
        ("T", r.t_end.as_ref().map(|v| v.span())),
        ("h", r.h.as_ref().map(|v| v.span())),
        ("scheme", r.scheme.as_ref().map(|v| v.span())),
        ("reference", r.reference.as_ref().map(|v| v.span())),
        ("other", r.other.as_ref().map(|v| v.span())),
        ("r", r.r.as_ref().map(|v| v.span())),
        ("grid_n", r.grid_n.as_ref().map(|v| v.span())),
        ("n_draws", r.n_draws.as_ref().map(|v| v.span())),
        ("kind", None),
    ];
    for (key, span) in present {
        if let Some(span) = span {
            if !allowed.contains(&key) {
                cx.push(
                    ErrorKind::UnknownKey,
                    Some(span),
                    format!("key `{key}` does not apply to run kind {}", kind.name()),
                );
            }
        }
    }

    let n_before = cx.errors.len();
    let spec = match kind {
        RunKind::Fixpoint => {
            let d = IterateOptions::default();
            let max_iter = cx.positive_int(&r.max_iter, "max_iter", d.max_iter);
            let stride = cx.positive_int(&r.stride, "stride", d.stride);
            let w1_tol = positive_f64(cx, &r.w1_tol, "w1_tol", d.w1_tol);
            let collapse_threshold =
                positive_f64(cx, &r.collapse_threshold, "collapse_threshold", d.collapse_threshold);
            RunSpec::Fixpoint(IterateOptions { max_iter, w1_tol, stride, collapse_threshold })
        }
        RunKind::Evolve => {
            let t_end = match &r.t_end {
                None => {
                    cx.push(ErrorKind::Syntax, Some(raw.span()), "run.T is required for evolve");
                    1.0
                }
                Some(t) => positive_f64(cx, &Some(t.clone()), "T", 1.0),
            };
            let h = match &r.h {
                None => {
                    cx.push(ErrorKind::Syntax, Some(raw.span()), "run.h is required for evolve");
                    0.1
                }
                Some(h) => {
                    let v = *h.get_ref();
                    if !(v > 0.0 && v < 1.0) {
                        cx.range(h, format!("h = {v} must lie in (0, 1)"));
                    }
                    v
                }
            };
            let scheme = match r.scheme.as_ref().map(|s| (s, s.get_ref().as_str())) {
                None => Scheme::default(),
                Some((_, "euler")) => Scheme::Euler,
                Some((_, "exp_euler")) => Scheme::ExpEuler,
                Some((s, other)) => {
                    cx.range(s, format!("scheme `{other}` is not one of euler, exp_euler"));
                    Scheme::default()
                }
            };
            let stride = cx.positive_int(&r.stride, "stride", 1);
            let reference = match &r.reference {
                None => Reference::None,
                Some(v) => match v.get_ref() {
                    Value::String(s) if s == "fixpoint" => Reference::Fixpoint,
                    Value::String(s) if s == "none" => Reference::None,
                    Value::Table(_) => match v.get_ref().clone().try_into::<RawMeasure>() {
                        Ok(m) => {
                            let m = Spanned::new(v.span(), m);
                            build_measure(cx, &m, "reference", measure_default_n())
                                .map(Reference::Given)
                                .unwrap_or(Reference::None)
                        }
                        Err(e) => {
                            cx.push(ErrorKind::Syntax, Some(v.span()), format!("reference: {}", e.message().trim()));
                            Reference::None
                        }
                    },
                    _ => {
                        cx.range(v, "reference must be \"fixpoint\", \"none\" or a measure table".into());
                        Reference::None
                    }
                },
            };
            RunSpec::Evolve { t_end, h, scheme, stride, reference }
        }
        RunKind::Metrics => {
            let other = r.other.as_ref().and_then(|o| build_measure(cx, o, "other", measure_default_n()));
            let rr = match &r.r {
                None => model_r,
                Some(v) => {
                    let x = *v.get_ref();
                    if !(x > 1.0 && x < 2.0) {
                        cx.range(v, format!("r = {x} must lie in (1, 2)"));
                    }
                    x
                }
            };
            let grid_n = cx.positive_int(&r.grid_n, "grid_n", kineq_core::metrics::DEFAULT_GRID_N);
            RunSpec::Metrics { other, r: rr, grid_n }
        }
        RunKind::McCompare => {
            let n_draws = cx.positive_int(&r.n_draws, "n_draws", 100_000);
            RunSpec::McCompare { n_draws }
        }
    };
    (cx.errors.len() == n_before).then_some(spec)
}

fn positive_f64(cx: &mut Ctx, v: &Option<Spanned<f64>>, key: &str, default: f64) -> f64 {
    match v {
        None => default,
        Some(s) => {
            let x = *s.get_ref();
            if !(x > 0.0 && x.is_finite()) {
                cx.range(s, format!("{key} = {x} must be > 0"));
            }
            x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TJON_WU: &str = r#"
[model]
atom_budget = 4096

[[model.entries]]
i = 2
alpha = 1.0
phi = { kind = "uniform", params = [0.0, 1.0], n = 512 }

[initial]
kind = "dirac"
params = [1.0]

[run]
kind = "fixpoint"
"#;

    #[test]
    fn minimal_tjon_wu_is_valid() {
        let s = parse_scenario(TJON_WU).unwrap();
        assert_eq!(s.model.entries.len(), 1);
        assert_eq!(s.model.entries[0].resolution, 512);
        assert_eq!(s.initial, DiscreteMeasure::dirac(1.0));
        assert!(matches!(s.run, RunSpec::Fixpoint(_)));
    }

    #[test]
    fn alpha_sum_without_tail_is_model_invalid() {
        let text = TJON_WU.replace("alpha = 1.0", "alpha = 0.8");
        let e = parse_scenario(&text).unwrap_err();
        assert!(e.iter().any(|e| e.kind == ErrorKind::ModelInvalid), "{e:?}");
    }

    #[test]
    fn duplicate_index_is_unknown_key_class() {
        let extra = "\n[[model.entries]]\ni = 2\nalpha = 0.0\nphi = { kind = \"dirac\", params = [0.5] }\n";
        let text = TJON_WU.replace("\n[initial]", &format!("{extra}\n[initial]"));
        let e = parse_scenario(&text).unwrap_err();
        let dup = e.iter().find(|e| e.kind == ErrorKind::UnknownKey).expect("duplicate reported");
        assert_eq!(dup.line, Some(11));
    }

    #[test]
    fn unknown_key_has_line() {
        let text = TJON_WU.replace("atom_budget = 4096", "atom_budget = 4096\nbudjet = 3");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].kind, e[0].line), (ErrorKind::UnknownKey, Some(4)));
    }

    #[test]
    fn step_out_of_range() {
        let text = TJON_WU.replace("kind = \"fixpoint\"", "kind = \"evolve\"\nT = 1.0\nh = 1.5");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!((e[0].kind, e[0].line), (ErrorKind::Range, Some(17)));
    }

    #[test]
    fn key_for_other_run_kind_rejected() {
        let text = TJON_WU.replace("kind = \"fixpoint\"", "kind = \"fixpoint\"\nn_draws = 10");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e[0].kind, ErrorKind::UnknownKey);
    }

    #[test]
    fn syntax_error() {
        let e = parse_scenario("[model\n").unwrap_err();
        assert_eq!((e[0].kind, e[0].line), (ErrorKind::Syntax, Some(1)));
    }

    #[test]
    fn initial_outside_d() {
        let text = TJON_WU.replace("params = [1.0]", "params = [2.0]");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!((e[0].kind, e[0].line), (ErrorKind::Range, Some(10)));
    }
}
