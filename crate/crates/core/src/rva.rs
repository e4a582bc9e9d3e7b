//! The abstract domain of per-region affine expectations and its transformer.
//!
//! An abstract element assigns one affine function over the template
//! variables to each analysis region. A step applies the concrete loop
//! functional to the concretization and, region by region, fits a plane
//! between the previous row (below) and the functional's output (above) by
//! linear programming. Both sides of the sandwich are re-checked exactly
//! after the plane is rounded to doubles.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::One;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::farkas::{add_farkas_rows, farkas_dominates};
use crate::guard::region_partition;
use crate::linexpr::{LinExpr, Var};
use crate::lp::{Bound, LinearProgram, LpOutcome};
use crate::piecewise::{pw_dominates, MinExpr, Piece, PiecewiseExpr};
use crate::polyhedron::Region;
use crate::program::{Cell, NormalizedProgram, Program};
use crate::rational::{self, Rational};
use crate::wp::loop_functional;

/// Half-width of the box that clamps objective points of unbounded regions.
pub const DEFAULT_OBJECTIVE_BOX: i64 = 100;

/// Order in which the rows of one abstract step are refreshed.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Schedule {
    /// Every row reads the previous element.
    Jacobi,
    /// Rows are refreshed from the last region to the first; each reads the
    /// rows already refreshed in the same sweep.
    #[default]
    ReverseSweep,
}

/// The fixed part of an abstract domain: template variables and regions.
#[derive(Clone, PartialEq, Debug)]
pub struct AbstractDomain {
    /// Variables the affine rows range over, in column order.
    pub vars: Vec<Var>,
    /// All state components; used to place objective points.
    pub state_vars: Vec<Var>,
    /// Pairwise-disjoint analysis regions, in row order.
    pub regions: Vec<Region>,
    /// Display names of the regions.
    pub labels: Vec<String>,
    /// Names of regions dropped because they are empty within the domain.
    pub dropped: Vec<String>,
    objective_points: Vec<Vec<BTreeMap<Var, Rational>>>,
}

impl AbstractDomain {
    /// Builds a domain from labelled regions, dropping empty ones.
    pub fn new(
        vars: Vec<Var>,
        state_vars: Vec<Var>,
        regions: Vec<(String, Region)>,
        objective_box: i64,
    ) -> Result<Self> {
        let mut live = Vec::new();
        let mut labels = Vec::new();
        let mut dropped = Vec::new();
        for (label, r) in regions {
            if r.is_empty() {
                dropped.push(label);
            } else {
                live.push(r);
                labels.push(label);
            }
        }
        for i in 0..live.len() {
            for j in i + 1..live.len() {
                if !live[i].intersect(&live[j]).is_empty() {
                    return Err(CoreError::Invalid(format!(
                        "analysis regions {} and {} overlap",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        let objective_points = live
            .iter()
            .map(|r| {
                r.disjuncts()
                    .iter()
                    .flat_map(|p| p.box_vertices(&state_vars, -objective_box, objective_box))
                    .collect()
            })
            .collect();
        Ok(AbstractDomain {
            vars,
            state_vars,
            regions: live,
            labels,
            dropped,
            objective_points,
        })
    }

    /// The program's declared regions, or its guard atoms, within its domain.
    pub fn from_program(p: &Program, np: &NormalizedProgram) -> Result<Self> {
        let regions: Vec<Region> = match &p.regions {
            Some(gs) => gs
                .iter()
                .map(|g| g.to_region())
                .collect::<Result<Vec<_>>>()?,
            None => region_partition(&p.guards(), usize::MAX)?
                .into_iter()
                .map(|a| a.region)
                .collect(),
        };
        let labelled = regions
            .into_iter()
            .enumerate()
            .map(|(i, r)| (format!("phi{}", i + 1), r.intersect(&np.domain)))
            .collect();
        Self::new(p.template_vars(), p.state_vars(), labelled, DEFAULT_OBJECTIVE_BOX)
    }

    pub fn width(&self) -> usize {
        self.vars.len() + 1
    }

    pub fn region_union(&self) -> Region {
        Region::from_disjoint(
            self.regions
                .iter()
                .flat_map(|r| r.disjuncts().iter().cloned())
                .collect(),
        )
    }

    pub fn objective_points(&self, region: usize) -> &[BTreeMap<Var, Rational>] {
        &self.objective_points[region]
    }

    /// Row of an affine expression over the template variables.
    pub fn expr_row(&self, e: &LinExpr) -> Option<Vec<f64>> {
        if e.vars().any(|v| !self.vars.contains(v)) {
            return None;
        }
        let mut row: Vec<f64> = self.vars.iter().map(|v| rational::to_f64(&e.coeff(v))).collect();
        row.push(rational::to_f64(e.constant_term()));
        Some(row)
    }

    /// The exact affine function of a row: variable coefficients, then the constant.
    pub fn row_expr(&self, row: &[f64]) -> LinExpr {
        let mut e = LinExpr::constant(exact(row[self.vars.len()]));
        for (v, &q) in self.vars.iter().zip(row) {
            e.add_term(v.clone(), exact(q));
        }
        e
    }
}

fn exact(x: f64) -> Rational {
    rational::from_f64(x).expect("coefficients are finite")
}

/// Coefficient rows over the regions of a shared domain.
#[derive(Clone, PartialEq, Debug)]
pub struct AbstractElement {
    pub domain: Arc<AbstractDomain>,
    pub rows: Vec<Vec<f64>>,
}

impl AbstractElement {
    /// The null matrix.
    pub fn bottom(domain: Arc<AbstractDomain>) -> Self {
        let rows = vec![vec![0.0; domain.width()]; domain.regions.len()];
        AbstractElement { domain, rows }
    }

    pub fn new(domain: Arc<AbstractDomain>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != domain.regions.len() || rows.iter().any(|r| r.len() != domain.width()) {
            return Err(CoreError::RegionMismatch);
        }
        if rows.iter().flatten().any(|q| !q.is_finite()) {
            return Err(CoreError::Invalid("non-finite coefficient".into()));
        }
        Ok(AbstractElement { domain, rows })
    }

    pub fn row_expr(&self, i: usize) -> LinExpr {
        self.domain.row_expr(&self.rows[i])
    }

    /// Largest absolute coefficient difference.
    pub fn max_delta(&self, other: &AbstractElement) -> f64 {
        self.rows
            .iter()
            .flatten()
            .zip(other.rows.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().flatten().map(|q| q.abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for AbstractElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                let cells: Vec<String> = r.iter().map(|q| q.to_string()).collect();
                format!("({})", cells.join(", "))
            })
            .collect();
        f.write_str(&rows.join(" "))
    }
}

/// The post-expectation as an abstract element: one affine row per region.
pub fn beta_abs(domain: &Arc<AbstractDomain>, post: &PiecewiseExpr) -> Result<AbstractElement> {
    let mut rows = Vec::with_capacity(domain.regions.len());
    for (i, r) in domain.regions.iter().enumerate() {
        let pieces = post.total_within(r);
        let mut values = pieces.iter().map(|p| &p.value);
        let first = values.next().cloned().unwrap_or_else(MinExpr::zero);
        let not_linear = |detail: String| CoreError::PostNotLinear {
            region: i,
            detail,
        };
        if values.any(|v| *v != first) {
            return Err(not_linear(format!("{} takes several values", domain.labels[i])));
        }
        let e = first
            .as_linear()
            .ok_or_else(|| not_linear(format!("{first} is not affine")))?;
        rows.push(domain.expr_row(e).ok_or_else(|| {
            not_linear(format!("{e} uses variables outside the template"))
        })?);
    }
    AbstractElement::new(domain.clone(), rows)
}

/// `Σ_i row_i · [φ_i]` with exact coefficients.
pub fn concretize(a: &AbstractElement) -> PiecewiseExpr {
    a.domain
        .regions
        .iter()
        .enumerate()
        .fold(PiecewiseExpr::zero(), |acc, (i, r)| {
            acc.join_disjoint(&PiecewiseExpr::on_region(r, MinExpr::single(a.row_expr(i))))
        })
}

/// `γ.a ⇛ γ.b` on the analysis regions.
pub fn abstract_leq(a: &AbstractElement, b: &AbstractElement) -> Result<bool> {
    if a.domain.regions != b.domain.regions || a.domain.vars != b.domain.vars {
        return Err(CoreError::RegionMismatch);
    }
    Ok((0..a.rows.len()).all(|i| row_leq(a, b, i)))
}

fn row_leq(a: &AbstractElement, b: &AbstractElement, i: usize) -> bool {
    let (ga, gb) = (a.row_expr(i), b.row_expr(i));
    a.domain.regions[i]
        .disjuncts()
        .iter()
        .all(|p| farkas_dominates(&ga, &gb, p).unwrap_or(true))
}

/// The plane synthesized by [`lower_bound_plane`] and the LP objective it attains.
#[derive(Clone, PartialEq, Debug)]
pub struct Plane {
    pub expr: LinExpr,
    pub objective: Rational,
}

/// An affine `g` over `vars` with `floor ≤ g` and `g ≤ t` for every term `t`
/// of every piece, all on the piece's polyhedron, maximizing `Σ g(point)`.
pub fn lower_bound_plane(
    pieces: &[Piece],
    floor: &LinExpr,
    vars: &[Var],
    points: &[BTreeMap<Var, Rational>],
) -> Result<Plane> {
    let mut lp = LinearProgram::new();
    let mut g: BTreeMap<Option<Var>, usize> = BTreeMap::new();
    for v in vars {
        g.insert(Some(v.clone()), lp.add_var(Bound::Free));
    }
    g.insert(None, lp.add_var(Bound::Free));
    let with_sign = |s: Rational| -> BTreeMap<Option<Var>, Vec<(usize, Rational)>> {
        g.iter().map(|(k, &c)| (k.clone(), vec![(c, s.clone())])).collect()
    };
    let above = with_sign(Rational::one());
    let below = with_sign(-Rational::one());
    let neg_floor = -floor.clone();
    for piece in pieces {
        for t in piece.value.terms() {
            // t - g ≥ 0
            add_farkas_rows(&mut lp, &piece.region, t, &above);
        }
        // g - floor ≥ 0
        add_farkas_rows(&mut lp, &piece.region, &neg_floor, &below);
    }
    let mut objective: Vec<(usize, Rational)> = vars
        .iter()
        .map(|v| {
            let s: Rational = points.iter().map(|p| p.get(v).cloned().unwrap_or_default()).sum();
            (g[&Some(v.clone())], s)
        })
        .collect();
    objective.push((g[&None], rational::int(points.len() as i64)));
    lp.maximize(objective);
    match lp.solve() {
        LpOutcome::Optimal(sol) => {
            let mut expr = LinExpr::constant(sol.x[g[&None]].clone());
            for v in vars {
                expr.add_term(v.clone(), sol.x[g[&Some(v.clone())]].clone());
            }
            Ok(Plane {
                expr,
                objective: sol.value,
            })
        }
        LpOutcome::Infeasible => Err(CoreError::InfeasibleSandwich {
            region: 0,
            detail: format!("no affine function lies between {floor} and the transformer output"),
        }),
        LpOutcome::Unbounded => Err(CoreError::UnboundedProgram(
            "plane objective is unbounded on the region".into(),
        )),
    }
}

/// Exact check of `floor ≤ g ≤ F` on every piece.
fn sandwich_holds(pieces: &[Piece], floor: &LinExpr, g: &LinExpr) -> bool {
    pieces.iter().all(|p| {
        farkas_dominates(floor, g, &p.region).unwrap_or(true)
            && p.value
                .terms()
                .iter()
                .all(|t| farkas_dominates(g, t, &p.region).unwrap_or(true))
    })
}

/// What happened to one row during a step.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RowOutcome {
    /// The rounded plane passed both exact checks.
    Synthesized,
    /// The region meets no transformer piece; the row is unchanged.
    Kept,
    /// Rounding broke the sandwich and no nudged plane repaired it; the
    /// previous row was kept.
    RoundingFallback,
}

#[derive(Clone, PartialEq, Debug)]
pub struct StepResult {
    pub element: AbstractElement,
    pub rows: Vec<RowOutcome>,
}

impl NormalizedProgram {
    /// The same program with cells, exit and domain intersected with `r`.
    pub fn restrict(&self, r: &Region) -> NormalizedProgram {
        NormalizedProgram {
            cells: self
                .cells
                .iter()
                .filter_map(|c| {
                    let region = c.region.intersect(r);
                    (!region.is_empty()).then(|| Cell {
                        region,
                        commands: c.commands.clone(),
                        choices: c.choices.clone(),
                    })
                })
                .collect(),
            exit: self.exit.intersect(r),
            domain: self.domain.intersect(r),
        }
    }
}

/// Rounds a plane to doubles; if the rounded plane leaves the sandwich,
/// lowers its constant by a few growing steps before giving up.
fn round_plane(d: &AbstractDomain, pieces: &[Piece], floor: &LinExpr, g: &LinExpr) -> Option<Vec<f64>> {
    let row = d.expr_row(g).expect("plane ranges over the template");
    if sandwich_holds(pieces, floor, &d.row_expr(&row)) {
        return Some(row);
    }
    let c = d.vars.len();
    let scale = row.iter().map(|q| q.abs()).fold(1.0, f64::max);
    for k in [1.0, 16.0, 256.0, 4096.0] {
        let mut nudged = row.clone();
        nudged[c] -= k * f64::EPSILON * scale;
        if sandwich_holds(pieces, floor, &d.row_expr(&nudged)) {
            return Some(nudged);
        }
    }
    None
}

fn step_row(
    np: &NormalizedProgram,
    beta: &PiecewiseExpr,
    current: &AbstractElement,
    i: usize,
) -> Result<(Vec<f64>, RowOutcome)> {
    let d = &current.domain;
    let region = &d.regions[i];
    let local = np.restrict(region);
    let f = loop_functional(&local, beta, &concretize(current));
    let pieces = f.total_within(region);
    let floor = current.row_expr(i);
    if pieces.is_empty() {
        return Ok((current.rows[i].clone(), RowOutcome::Kept));
    }
    let plane = lower_bound_plane(&pieces, &floor, &d.vars, d.objective_points(i)).map_err(
        |e| match e {
            CoreError::InfeasibleSandwich { detail, .. } => CoreError::InfeasibleSandwich {
                region: i,
                detail: format!("{}: {detail}", d.labels[i]),
            },
            other => other,
        },
    )?;
    Ok(match round_plane(d, &pieces, &floor, &plane.expr) {
        Some(row) => (row, RowOutcome::Synthesized),
        None => (current.rows[i].clone(), RowOutcome::RoundingFallback),
    })
}

/// One application of the abstract transformer under `schedule`.
pub fn abstract_step_with(
    np: &NormalizedProgram,
    beta_abs: &AbstractElement,
    a: &AbstractElement,
    schedule: Schedule,
) -> Result<StepResult> {
    if beta_abs.domain != a.domain {
        return Err(CoreError::RegionMismatch);
    }
    let beta = concretize(beta_abs);
    let m = a.rows.len();
    let mut outcomes = vec![RowOutcome::Kept; m];
    let element = match schedule {
        Schedule::Jacobi => {
            let rows: Vec<(Vec<f64>, RowOutcome)> = (0..m)
                .into_par_iter()
                .map(|i| step_row(np, &beta, a, i))
                .collect::<Result<_>>()?;
            let mut out = a.clone();
            for (i, (row, o)) in rows.into_iter().enumerate() {
                out.rows[i] = row;
                outcomes[i] = o;
            }
            out
        }
        Schedule::ReverseSweep => {
            let mut out = a.clone();
            for i in (0..m).rev() {
                let (row, o) = step_row(np, &beta, &out, i)?;
                out.rows[i] = row;
                outcomes[i] = o;
            }
            out
        }
    };
    Ok(StepResult {
        element,
        rows: outcomes,
    })
}

/// One application of the abstract transformer with the default schedule.
pub fn abstract_step(
    np: &NormalizedProgram,
    beta_abs: &AbstractElement,
    a: &AbstractElement,
) -> Result<AbstractElement> {
    Ok(abstract_step_with(np, beta_abs, a, Schedule::default())?.element)
}

/// `γ.out ⇛ f.(γ.a)` on every region; the defining property of a step.
pub fn step_is_sound(
    np: &NormalizedProgram,
    beta_abs: &AbstractElement,
    a: &AbstractElement,
    out: &AbstractElement,
) -> bool {
    let f = loop_functional(np, &concretize(beta_abs), &concretize(a));
    pw_dominates(&concretize(out), &f, &a.domain.region_union())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::guard::{CmpOp, Guard};
    use crate::polyhedron::{ge, le, Polyhedron};
    use crate::program::{normalize, Assignment, GuardedCommand, ProbBranch};
    use crate::rational::ratio;

    fn v(name: &str) -> LinExpr {
        LinExpr::var(name)
    }

    fn k(c: i64) -> LinExpr {
        LinExpr::int(c)
    }

    fn assign(pairs: &[(&str, LinExpr)]) -> Assignment {
        Assignment::new(pairs.iter().map(|(n, e)| (Var::new(n), e.clone())))
    }

    fn geometric() -> Program {
        let coin = vec![
            ProbBranch::new(assign(&[("x", k(0)), ("i", v("i") + k(1))]), ratio(1, 2)),
            ProbBranch::new(assign(&[("x", k(1)), ("i", v("i") + k(1))]), ratio(1, 2)),
        ];
        let mut p = Program::new(
            vec![Var::new("x"), Var::new("i")],
            vec![GuardedCommand::new(Guard::cmp(v("x"), CmpOp::Ne, k(0)), coin)],
            PiecewiseExpr::linear(v("i")),
        );
        p.assume = Guard::cmp(v("i"), CmpOp::Ge, k(0));
        p.template = Some(vec![Var::new("i")]);
        p
    }

    fn martingale() -> Program {
        let (c, b) = (|| v("c"), || v("b"));
        let guard = Guard::and(vec![
            Guard::cmp(k(0), CmpOp::Lt, b()),
            Guard::cmp(b(), CmpOp::Le, c()),
        ]);
        let double = vec![
            ProbBranch::new(assign(&[("c", c() + b()), ("b", k(0))]), ratio(1, 2)),
            ProbBranch::new(assign(&[("c", c() - b()), ("b", b().scale(&ratio(2, 1)))]), ratio(1, 2)),
        ];
        let mut p = Program::new(
            vec![Var::new("c"), Var::new("b")],
            vec![GuardedCommand::new(guard, double)],
            PiecewiseExpr::linear(c()),
        );
        p.assume = Guard::cmp(c(), CmpOp::Ge, k(0));
        let chain = |a: LinExpr, op1: CmpOp, m: LinExpr, op2: CmpOp, z: LinExpr| {
            Guard::and(vec![Guard::cmp(a, op1, m.clone()), Guard::cmp(m, op2, z)])
        };
        p.regions = Some(vec![
            chain(k(0), CmpOp::Le, c(), CmpOp::Lt, b()),
            chain(k(0), CmpOp::Lt, b(), CmpOp::Le, c()),
            chain(b(), CmpOp::Le, k(0), CmpOp::Le, c()),
            chain(b(), CmpOp::Le, c(), CmpOp::Lt, k(0)),
            chain(c(), CmpOp::Lt, b(), CmpOp::Le, k(0)),
            chain(c(), CmpOp::Lt, k(0), CmpOp::Lt, b()),
        ]);
        p
    }

    fn setup(p: &Program) -> (NormalizedProgram, Arc<AbstractDomain>, AbstractElement) {
        let np = normalize(p).unwrap();
        let d = Arc::new(AbstractDomain::from_program(p, &np).unwrap());
        let beta = beta_abs(&d, &p.post).unwrap();
        (np, d, beta)
    }

    #[test]
    fn geometric_steps() {
        let (np, d, beta) = setup(&geometric());
        assert_eq!(d.labels, vec!["phi1", "phi2"]);
        let bot = AbstractElement::bottom(d.clone());
        let one = abstract_step(&np, &beta, &bot).unwrap();
        assert_eq!(one.rows, vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let half = AbstractElement::new(d, vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let next = abstract_step(&np, &beta, &half).unwrap();
        assert_eq!(next.rows, vec![vec![1.0, 0.0], vec![0.75, 1.0]]);
        assert!(abstract_leq(&half, &next).unwrap());
        assert!(step_is_sound(&np, &beta, &half, &next));
    }

    #[test]
    fn martingale_first_step() {
        let (np, d, beta) = setup(&martingale());
        assert_eq!(d.labels, vec!["phi1", "phi2", "phi3"]);
        assert_eq!(d.dropped, vec!["phi4", "phi5", "phi6"]);
        let bot = AbstractElement::bottom(d);
        let one = abstract_step(&np, &beta, &bot).unwrap();
        assert_eq!(
            one.rows,
            vec![vec![1.0, 0.0, 0.0], vec![0.5, 0.5, 0.0], vec![1.0, 0.0, 0.0]]
        );
        let jacobi = abstract_step_with(&np, &beta, &bot, Schedule::Jacobi).unwrap();
        assert_eq!(jacobi.element.rows[1], vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn wedge_plane() {
        // Second martingale step on φ2: the previous row is c/2 + b/2 and the
        // transformer gives c on Ψ1 = {b ≤ c < 3b} and 3c/4 + 3b/4 on
        // Ψ2 = {0 < 3b ≤ c}.
        let (c, b) = (v("c"), v("b"));
        let psi1 = Polyhedron::new([le(b.clone(), c.clone()), le(c.clone(), b.scale(&ratio(3, 1)) - k(1))]);
        let psi2 = Polyhedron::new([ge(b.clone(), k(1)), le(b.scale(&ratio(3, 1)), c.clone())]);
        let pieces = vec![
            Piece {
                region: psi1,
                value: MinExpr::single(c.clone()),
            },
            Piece {
                region: psi2,
                value: MinExpr::single((c.clone() + b.clone()).scale(&ratio(3, 4))),
            },
        ];
        let floor = (c.clone() + b.clone()).scale(&ratio(1, 2));
        let phi2 = Polyhedron::new([ge(b.clone(), k(1)), le(b.clone(), c.clone())]);
        let vars = vec![Var::new("c"), Var::new("b")];
        let points = phi2.box_vertices(&vars, -100, 100);
        let plane = lower_bound_plane(&pieces, &floor, &vars, &points).unwrap();
        assert_eq!(plane.expr, c.scale(&ratio(3, 4)) + b.scale(&ratio(1, 4)));
    }

    #[test]
    fn tent_gets_a_supporting_plane() {
        let x = v("x");
        let cell = Polyhedron::new([ge(x.clone(), k(0)), le(x.clone(), k(1))]);
        let pieces = vec![Piece {
            region: cell,
            value: MinExpr::new([x.clone(), k(1) - x.clone()]),
        }];
        let mid: BTreeMap<Var, Rational> = [(Var::new("x"), ratio(1, 2))].into_iter().collect();
        let plane = lower_bound_plane(&pieces, &LinExpr::zero(), &[Var::new("x")], &[mid]).unwrap();
        // Any affine g ≤ min(x, 1 - x) on [0, 1] has g(0) ≤ 0 and g(1) ≤ 0, so g(1/2) ≤ 0.
        assert_eq!(plane.objective, Rational::zero());
        assert!(sandwich_holds(&pieces, &LinExpr::zero(), &plane.expr));
    }

    #[test]
    fn leq_examples() {
        let (_, d, _) = setup(&geometric());
        let el = |rows: Vec<Vec<f64>>| AbstractElement::new(d.clone(), rows).unwrap();
        let fixed = el(vec![vec![1.0, 0.0], vec![1.0, 2.0]]);
        let lower = el(vec![vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert!(abstract_leq(&lower, &fixed).unwrap());
        assert!(!abstract_leq(&fixed, &lower).unwrap());
        assert!(abstract_leq(&AbstractElement::bottom(d.clone()), &fixed).unwrap());
        let row2 = el(vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        let row3 = el(vec![vec![1.0, 0.0], vec![0.75, 1.0]]);
        assert!(abstract_leq(&row2, &row3).unwrap());
    }

    #[test]
    fn concretization_examples() {
        let (_, d, _) = setup(&geometric());
        let fixed = AbstractElement::new(d.clone(), vec![vec![1.0, 0.0], vec![1.0, 2.0]]).unwrap();
        let g = concretize(&fixed);
        let s = crate::linexpr::state(&[("x", 1), ("i", 0)]);
        assert_eq!(g.evaluate(&s), ratio(2, 1));
        assert!(concretize(&AbstractElement::bottom(d)).is_zero());
    }

    #[test]
    fn post_must_be_linear_per_region() {
        let mut p = geometric();
        p.post = PiecewiseExpr::linear(v("x"));
        let np = normalize(&p).unwrap();
        let d = Arc::new(AbstractDomain::from_program(&p, &np).unwrap());
        assert!(matches!(beta_abs(&d, &p.post), Err(CoreError::PostNotLinear { .. })));
    }
}
