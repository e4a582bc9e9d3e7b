//! Running the full analysis on a parsed program and rendering the result as
//! a table, CSV or JSON.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use prexpect_core::fixpoint::{
    check_correctness, exactness_check, init_value, kleene_iterate, snapped_fixed_point,
    InitValue, IterationTrace, KleeneOptions, Status, SNAP_MAX_DEN,
};
use prexpect_core::rational;
use prexpect_core::rva::{beta_abs, concretize, AbstractDomain};
use prexpect_core::{normalize, CoreError, PiecewiseExpr, Program};
use serde::Serialize;

/// Whether the converged element is the least fixed point itself.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    /// The snapped fixed point passed the pre-fixed-point check.
    Exact,
    /// A certified lower bound; inexact or not snappable.
    LowerBoundOnly,
    /// No certified bound: the chain did not converge or a check failed.
    Unknown,
}

#[derive(Clone, Copy, Default, PartialEq, Debug, Serialize)]
pub struct Timings {
    pub normalize_ms: f64,
    pub iterate_ms: f64,
    pub exactness_ms: f64,
    pub init_ms: f64,
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub trace: IterationTrace,
    pub exact: Exactness,
    /// The bound (or fixed point) as an exact expectation, when certified.
    pub result: Option<PiecewiseExpr>,
    pub init: Option<InitValue>,
    /// `alpha ⇛ phi_init`, when an `alpha` was supplied and a bound exists.
    pub correctness: Option<bool>,
    pub timings: Timings,
}

#[derive(Debug, thiserror::Error)]
pub enum AnalyzeError {
    /// The program is unsuitable for analysis.
    #[error("{0}")]
    Setup(CoreError),
    /// A step failed after `partial` iterations.
    #[error("{0}")]
    Step(Box<prexpect_core::fixpoint::IterationError>),
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

pub fn analyze(
    p: &Program,
    opts: &KleeneOptions,
    alpha: Option<&PiecewiseExpr>,
) -> Result<AnalysisReport, AnalyzeError> {
    let mut timings = Timings::default();
    let t = Instant::now();
    let np = normalize(p).map_err(AnalyzeError::Setup)?;
    let domain = Arc::new(AbstractDomain::from_program(p, &np).map_err(AnalyzeError::Setup)?);
    let beta = beta_abs(&domain, &p.post).map_err(AnalyzeError::Setup)?;
    timings.normalize_ms = ms(t);

    let t = Instant::now();
    let trace = kleene_iterate(&np, &beta, opts).map_err(|e| AnalyzeError::Step(Box::new(e)))?;
    timings.iterate_ms = ms(t);

    let t = Instant::now();
    let (exact, result) = if trace.is_sound_bound() {
        match snapped_fixed_point(&trace) {
            Some(phi) if exactness_check(&np, &p.post, &phi) => (Exactness::Exact, Some(phi)),
            _ => (Exactness::LowerBoundOnly, Some(concretize(trace.last()))),
        }
    } else {
        (Exactness::Unknown, None)
    };
    timings.exactness_ms = ms(t);

    let t = Instant::now();
    let init = match (&result, &p.init) {
        (Some(phi), Some(a)) => Some(init_value(phi, a, &np.domain)),
        _ => None,
    };
    let correctness = match (alpha, &init) {
        (Some(alpha), Some(iv)) => Some(check_correctness(alpha, &iv.value, &iv.within)),
        (Some(alpha), None) => result
            .as_ref()
            .map(|phi| check_correctness(alpha, phi, &np.domain)),
        _ => None,
    };
    timings.init_ms = ms(t);

    Ok(AnalysisReport {
        trace,
        exact,
        result,
        init,
        correctness,
        timings,
    })
}

/// `x` rounded to 10 significant digits, printed without trailing zeros.
pub fn sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.9e}").parse().expect("formatted float parses");
    if rounded.abs() < 1e-4 || rounded.abs() >= 1e15 {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn column_names(trace: &IterationTrace) -> Vec<String> {
    let d = trace.domain();
    let mut out = Vec::new();
    for label in &d.labels {
        for v in &d.vars {
            out.push(format!("{label}_{v}"));
        }
        out.push(format!("{label}_1"));
    }
    out
}

/// One line per iterate: `iter` then the coefficients in region-major order,
/// each region's template coefficients followed by its constant.
pub fn render_csv(trace: &IterationTrace) -> String {
    let mut out = format!("iter,{}\n", column_names(trace).join(","));
    for (k, a) in trace.rows.iter().enumerate() {
        let cells: Vec<String> = a.rows.iter().flatten().map(|x| format!("{x}")).collect();
        let _ = writeln!(out, "{k},{}", cells.join(","));
    }
    out
}

fn status_line(trace: &IterationTrace) -> String {
    let n = trace.rows.len() - 1;
    match &trace.status {
        Status::Converged => format!("converged after {n} iterations (residual {:e})", trace.residual),
        Status::MaxIterations => format!(
            "stopped after {n} iterations without converging (residual {:e}); the last iterate is a lower bound",
            trace.residual
        ),
        Status::Diverged(d) => format!(
            "diverged after {n} iterations: {d}; no pre-fixed point detected at this bound (this is not a proof of divergence)"
        ),
    }
}

fn exact_line(r: &AnalysisReport) -> &'static str {
    match r.exact {
        Exactness::Exact => "exact (the snapped limit is a pre-fixed point)",
        Exactness::LowerBoundOnly => "lower bound only (inexact or unsnappable)",
        Exactness::Unknown => "unknown (no certified bound)",
    }
}

fn init_text(iv: &InitValue) -> String {
    match &iv.expr {
        Some(e) => e.to_string(),
        None => iv.value.to_string(),
    }
}

pub fn render_table(name: &str, r: &AnalysisReport) -> String {
    let trace = &r.trace;
    let d = trace.domain();
    let mut out = format!("program: {name}\nregions:\n");
    for (label, region) in d.labels.iter().zip(&d.regions) {
        let _ = writeln!(out, "  {label}: {region}");
    }
    if !d.dropped.is_empty() {
        let _ = writeln!(out, "  empty on the domain: {}", d.dropped.join(", "));
    }
    let template: Vec<String> = d.vars.iter().map(|v| v.to_string()).chain(["1".into()]).collect();
    let _ = writeln!(out, "row layout: ({})", template.join(", "));
    let cells: Vec<Vec<String>> = trace
        .rows
        .iter()
        .map(|a| {
            a.rows
                .iter()
                .map(|row| format!("({})", row.iter().map(|x| sig10(*x)).collect::<Vec<_>>().join(", ")))
                .collect()
        })
        .collect();
    let width = cells.iter().flatten().map(String::len).chain(d.labels.iter().map(String::len)).max().unwrap_or(0);
    let iw = trace.rows.len().to_string().len().max(4);
    let _ = write!(out, "{:<iw$}", "iter");
    for l in &d.labels {
        let _ = write!(out, "  {l:<width$}");
    }
    out.push('\n');
    for (k, row) in cells.iter().enumerate() {
        let _ = write!(out, "{k:<iw$}");
        for c in row {
            let _ = write!(out, "  {c:<width$}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "status: {}", status_line(trace));
    let _ = writeln!(
        out,
        "chain checks: {} of {} steps verified, {} rounding fallbacks",
        trace.rows.len() - 1 - trace.chain_violations.len(),
        trace.rows.len() - 1,
        trace.rounding_fallbacks
    );
    if !trace.chain_violations.is_empty() {
        let _ = writeln!(out, "chain violations at steps: {:?}", trace.chain_violations);
    }
    let _ = writeln!(out, "exact: {}", exact_line(r));
    if let Some(phi) = &r.result {
        let _ = writeln!(out, "bound: {phi}");
    }
    if let Some(iv) = &r.init {
        let _ = writeln!(out, "init value: {}", init_text(iv));
    }
    if let Some(ok) = r.correctness {
        let _ = writeln!(out, "correctness: {}", if ok { "holds" } else { "not established" });
    }
    let t = &r.timings;
    let _ = writeln!(
        out,
        "timings (ms): normalize {:.1}, iterate {:.1}, exactness {:.1}, init {:.1}",
        t.normalize_ms, t.iterate_ms, t.exactness_ms, t.init_ms
    );
    out
}

#[derive(Serialize)]
struct JsonRegion<'a> {
    label: &'a str,
    region: String,
}

#[derive(Serialize)]
struct JsonRow {
    iter: usize,
    coefficients: Vec<Vec<f64>>,
    /// Each coefficient snapped to a small-denominator rational, if possible.
    rationals: Vec<Vec<Option<String>>>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    program: &'a str,
    template: Vec<String>,
    regions: Vec<JsonRegion<'a>>,
    dropped_regions: &'a [String],
    status: String,
    status_detail: String,
    residual: f64,
    iterations: usize,
    chain_violations: &'a [usize],
    rounding_fallbacks: usize,
    rows: Vec<JsonRow>,
    exact: Exactness,
    bound: Option<String>,
    init_value: Option<String>,
    correctness: Option<bool>,
    timings_ms: Timings,
}

pub fn render_json(name: &str, r: &AnalysisReport) -> String {
    let trace = &r.trace;
    let d = trace.domain();
    let rows = trace
        .rows
        .iter()
        .enumerate()
        .map(|(iter, a)| JsonRow {
            iter,
            coefficients: a.rows.clone(),
            rationals: a
                .rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|x| rational::snap(*x, SNAP_MAX_DEN).map(|q| q.to_string()))
                        .collect()
                })
                .collect(),
        })
        .collect();
    let report = JsonReport {
        program: name,
        template: d.vars.iter().map(|v| v.to_string()).collect(),
        regions: d
            .labels
            .iter()
            .zip(&d.regions)
            .map(|(label, region)| JsonRegion {
                label,
                region: region.to_string(),
            })
            .collect(),
        dropped_regions: &d.dropped,
        status: trace.status.to_string(),
        status_detail: status_line(trace),
        residual: trace.residual,
        iterations: trace.rows.len() - 1,
        chain_violations: &trace.chain_violations,
        rounding_fallbacks: trace.rounding_fallbacks,
        rows,
        exact: r.exact,
        bound: r.result.as_ref().map(|p| p.to_string()),
        init_value: r.init.as_ref().map(init_text),
        correctness: r.correctness,
        timings_ms: r.timings,
    };
    serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
}
