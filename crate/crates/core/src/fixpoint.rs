//! Kleene iteration of the abstract transformer from the null matrix, with
//! convergence and divergence bookkeeping, the pre-fixed-point test that
//! certifies an exact result, and evaluation at the loop's initialization.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::error::CoreError;
use crate::linexpr::LinExpr;
use crate::piecewise::{pw_dominates, MinExpr, PiecewiseExpr};
use crate::polyhedron::Region;
use crate::program::{region_preimage, Assignment, NormalizedProgram};
use crate::rational::{self, Rational};
use crate::rva::{abstract_leq, abstract_step_with, AbstractDomain, AbstractElement, RowOutcome, Schedule};
use crate::wp::loop_functional;

/// Largest denominator accepted when snapping converged doubles to rationals.
pub const SNAP_MAX_DEN: u64 = 1_000_000;

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct KleeneOptions {
    /// Convergence threshold on the largest coefficient change.
    pub eps: f64,
    pub max_iter: usize,
    /// Coefficient magnitude past which the chain is declared divergent.
    pub divergence_bound: f64,
    /// Number of consecutive identical nonzero steps that counts as unbounded
    /// linear growth; 0 disables the test.
    pub growth_window: usize,
    pub schedule: Schedule,
}

impl Default for KleeneOptions {
    fn default() -> Self {
        KleeneOptions {
            eps: 1e-12,
            max_iter: 10_000,
            divergence_bound: 1e12,
            growth_window: 64,
            schedule: Schedule::default(),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum Status {
    Converged,
    Diverged(Divergence),
    MaxIterations,
}

#[derive(Clone, PartialEq, Debug)]
pub enum Divergence {
    /// Some coefficient exceeded the bound.
    BoundExceeded { iteration: usize, magnitude: f64 },
    /// The last `window` steps added the same nonzero increment, so the bound
    /// will be crossed after roughly `remaining` more iterations.
    LinearGrowth { window: usize, remaining: f64 },
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Converged => f.write_str("converged"),
            Status::MaxIterations => f.write_str("max-iterations"),
            Status::Diverged(_) => f.write_str("diverged"),
        }
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::BoundExceeded {
                iteration,
                magnitude,
            } => write!(f, "coefficient magnitude {magnitude:e} at iteration {iteration}"),
            Divergence::LinearGrowth { window, remaining } => write!(
                f,
                "coefficients grew by the same step for {window} iterations; \
                 the bound is reached in about {remaining:.0} more"
            ),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct IterationTrace {
    /// `rows[k]` is the k-th iterate; `rows[0]` is the null matrix.
    pub rows: Vec<AbstractElement>,
    pub status: Status,
    /// Largest coefficient change in the final step.
    pub residual: f64,
    /// Steps `k` where `rows[k-1] ⇛ rows[k]` failed the exact check.
    pub chain_violations: Vec<usize>,
    /// Number of rows that kept their previous value because rounding
    /// broke the exact sandwich.
    pub rounding_fallbacks: usize,
}

impl IterationTrace {
    pub fn last(&self) -> &AbstractElement {
        self.rows.last().expect("a trace starts at the null matrix")
    }

    pub fn domain(&self) -> &Arc<AbstractDomain> {
        &self.last().domain
    }

    pub fn checks_passed(&self) -> bool {
        self.chain_violations.is_empty()
    }

    /// The final iterate is a certified lower bound of the least fixed point.
    pub fn is_sound_bound(&self) -> bool {
        self.status == Status::Converged && self.checks_passed()
    }
}

/// A failed step, with the iterates computed before it.
#[derive(Debug, Error)]
#[error("iteration {iteration} failed: {error}")]
pub struct IterationError {
    pub iteration: usize,
    pub error: CoreError,
    pub partial: Box<IterationTrace>,
}

pub fn kleene_iterate(
    np: &NormalizedProgram,
    beta_abs: &AbstractElement,
    opts: &KleeneOptions,
) -> Result<IterationTrace, IterationError> {
    let mut trace = IterationTrace {
        rows: vec![AbstractElement::bottom(beta_abs.domain.clone())],
        status: Status::MaxIterations,
        residual: f64::INFINITY,
        chain_violations: Vec::new(),
        rounding_fallbacks: 0,
    };
    let mut last_delta: Option<Vec<f64>> = None;
    let mut repeats = 0usize;
    for k in 1..=opts.max_iter {
        let prev = trace.last().clone();
        let step = match abstract_step_with(np, beta_abs, &prev, opts.schedule) {
            Ok(s) => s,
            Err(error) => {
                return Err(IterationError {
                    iteration: k,
                    error,
                    partial: Box::new(trace),
                })
            }
        };
        let next = step.element;
        trace.rounding_fallbacks += step
            .rows
            .iter()
            .filter(|o| **o == RowOutcome::RoundingFallback)
            .count();
        if !abstract_leq(&prev, &next).unwrap_or(false) {
            trace.chain_violations.push(k);
        }
        trace.residual = prev.max_delta(&next);
        let delta: Vec<f64> = next
            .rows
            .iter()
            .flatten()
            .zip(prev.rows.iter().flatten())
            .map(|(a, b)| a - b)
            .collect();
        trace.rows.push(next);
        let magnitude = trace.last().max_abs();
        if magnitude > opts.divergence_bound {
            trace.status = Status::Diverged(Divergence::BoundExceeded {
                iteration: k,
                magnitude,
            });
            return Ok(trace);
        }
        if trace.residual < opts.eps {
            trace.status = Status::Converged;
            return Ok(trace);
        }
        repeats = if last_delta.as_ref() == Some(&delta) { repeats + 1 } else { 1 };
        if opts.growth_window > 0 && repeats >= opts.growth_window {
            let step = delta.iter().map(|d| d.abs()).fold(0.0, f64::max);
            let remaining = ((opts.divergence_bound - magnitude) / step).max(0.0);
            trace.status = Status::Diverged(Divergence::LinearGrowth {
                window: repeats,
                remaining,
            });
            return Ok(trace);
        }
        last_delta = Some(delta);
    }
    Ok(trace)
}

/// Rows with every coefficient replaced by its best small-denominator
/// rational approximation.
pub fn snap_rows(a: &AbstractElement, max_den: u64) -> Option<Vec<Vec<Rational>>> {
    a.rows
        .iter()
        .map(|r| r.iter().map(|&q| rational::snap(q, max_den)).collect())
        .collect()
}

/// `Σ_i row_i · [φ_i]` for exact rows.
pub fn concretize_exact(domain: &AbstractDomain, rows: &[Vec<Rational>]) -> PiecewiseExpr {
    domain
        .regions
        .iter()
        .zip(rows)
        .fold(PiecewiseExpr::zero(), |acc, (r, row)| {
            let n = domain.vars.len();
            let mut e = LinExpr::constant(row[n].clone());
            for (v, q) in domain.vars.iter().zip(row) {
                e.add_term(v.clone(), q.clone());
            }
            acc.join_disjoint(&PiecewiseExpr::on_region(r, MinExpr::single(e)))
        })
}

/// `f.phi ⇛ phi` on the analysis domain: `phi` is a pre-fixed point, so a
/// chain that converged to it reached the least fixed point.
pub fn exactness_check(np: &NormalizedProgram, beta: &PiecewiseExpr, phi: &PiecewiseExpr) -> bool {
    pw_dominates(&loop_functional(np, beta, phi), phi, &np.domain)
}

/// The converged element, snapped, as an exact expectation.
pub fn snapped_fixed_point(trace: &IterationTrace) -> Option<PiecewiseExpr> {
    let rows = snap_rows(trace.last(), SNAP_MAX_DEN)?;
    Some(concretize_exact(trace.domain(), &rows))
}

/// `phi ∘ init`.
pub fn apply_init(phi: &PiecewiseExpr, init: &Assignment) -> PiecewiseExpr {
    phi.substitute(init.as_substitution()).simplify()
}

/// The value of `phi` right after `init`, over the initial states whose
/// successor lies in `domain`.
#[derive(Clone, PartialEq, Debug)]
pub struct InitValue {
    pub value: PiecewiseExpr,
    /// Initial states covered by the analysis domain.
    pub within: Region,
    /// The single affine expression `value` takes on all of `within`, if any.
    pub expr: Option<LinExpr>,
}

pub fn init_value(phi: &PiecewiseExpr, init: &Assignment, domain: &Region) -> InitValue {
    let value = apply_init(phi, init);
    let within = region_preimage(domain, init);
    let expr = match value.pieces().first() {
        None => Some(LinExpr::zero()),
        Some(first) => first.value.as_linear().cloned().filter(|e| {
            value.pieces().iter().all(|p| p.value.as_linear() == Some(e))
                && value.support().covers(&within)
        }),
    };
    InitValue {
        value,
        within,
        expr,
    }
}

/// `alpha ⇛ phi_init` on `within`.
pub fn check_correctness(alpha: &PiecewiseExpr, phi_init: &PiecewiseExpr, within: &Region) -> bool {
    pw_dominates(alpha, phi_init, within)
}
