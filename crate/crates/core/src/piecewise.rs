//! Piecewise-linear-concave expectations: disjoint polyhedral pieces, each
//! carrying the minimum of finitely many affine terms. Outside every piece
//! the value is zero.

use std::fmt;

use num_traits::Zero;

use crate::farkas::{farkas_dominates, min_dominates};
use crate::linexpr::{LinExpr, Valuation, Var};
use crate::polyhedron::{Polyhedron, Region};
use crate::rational::Rational;

/// `min(t_1, …, t_k)` over affine terms; always at least one term.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MinExpr {
    terms: Vec<LinExpr>,
}

impl MinExpr {
    pub fn new(terms: impl IntoIterator<Item = LinExpr>) -> Self {
        let mut terms: Vec<LinExpr> = terms.into_iter().collect();
        assert!(!terms.is_empty(), "a min-expression has at least one term");
        terms.sort();
        terms.dedup();
        MinExpr { terms }
    }

    pub fn single(e: LinExpr) -> Self {
        MinExpr { terms: vec![e] }
    }

    pub fn zero() -> Self {
        Self::single(LinExpr::zero())
    }

    pub fn terms(&self) -> &[LinExpr] {
        &self.terms
    }

    /// The affine expression when there is exactly one term.
    pub fn as_linear(&self) -> Option<&LinExpr> {
        match self.terms.as_slice() {
            [t] => Some(t),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_linear().is_some_and(|t| t.is_zero())
    }

    pub fn eval(&self, env: &impl Valuation) -> Rational {
        self.terms
            .iter()
            .map(|t| t.eval(env))
            .min()
            .expect("nonempty")
    }

    /// `min a_i + min b_j = min_{i,j} (a_i + b_j)`.
    pub fn add(&self, other: &MinExpr) -> MinExpr {
        MinExpr::new(
            self.terms
                .iter()
                .flat_map(|a| other.terms.iter().map(move |b| a + b)),
        )
    }

    pub fn min(&self, other: &MinExpr) -> MinExpr {
        MinExpr::new(self.terms.iter().chain(&other.terms).cloned())
    }

    /// Scaling by a nonnegative factor commutes with the minimum.
    pub fn scale(&self, k: &Rational) -> MinExpr {
        debug_assert!(*k >= Rational::zero());
        MinExpr::new(self.terms.iter().map(|t| t.scale(k)))
    }

    pub fn substitute(&self, f: impl Fn(&Var) -> Option<LinExpr>) -> MinExpr {
        MinExpr::new(self.terms.iter().map(|t| t.substitute(&f)))
    }

    /// Drops terms that some other term lies below everywhere on `p`.
    pub fn prune(&self, p: &Polyhedron) -> MinExpr {
        if self.terms.len() < 2 {
            return self.clone();
        }
        let mut kept: Vec<LinExpr> = Vec::new();
        for (i, t) in self.terms.iter().enumerate() {
            let redundant = self.terms.iter().enumerate().any(|(j, u)| {
                // Ties are broken by index so that one of two equal terms survives.
                j != i
                    && (kept.contains(u) || j > i)
                    && farkas_dominates(u, t, p).unwrap_or(true)
            });
            if !redundant {
                kept.push(t.clone());
            }
        }
        MinExpr::new(kept)
    }
}

impl fmt::Display for MinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.terms.as_slice() {
            [t] => write!(f, "{t}"),
            ts => {
                let parts: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
                write!(f, "min({})", parts.join(", "))
            }
        }
    }
}

impl fmt::Debug for MinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Piece {
    pub region: Polyhedron,
    pub value: MinExpr,
}

/// A finite family of pairwise-disjoint pieces; zero elsewhere.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PiecewiseExpr {
    pieces: Vec<Piece>,
}

impl PiecewiseExpr {
    pub fn zero() -> Self {
        PiecewiseExpr { pieces: Vec::new() }
    }

    /// One linear expression on the whole space.
    pub fn linear(e: LinExpr) -> Self {
        Self::from_pieces([(Polyhedron::universe(), MinExpr::single(e))])
    }

    /// Wraps pieces the caller guarantees are pairwise disjoint; empty pieces
    /// and pieces that are identically zero are dropped.
    pub fn from_pieces(pieces: impl IntoIterator<Item = (Polyhedron, MinExpr)>) -> Self {
        let mut out: Vec<Piece> = pieces
            .into_iter()
            .filter(|(p, v)| !v.is_zero() && !p.is_empty())
            .map(|(region, value)| Piece { region, value })
            .collect();
        out.sort();
        PiecewiseExpr { pieces: out }
    }

    /// `value` on every disjunct of `region`.
    pub fn on_region(region: &Region, value: MinExpr) -> Self {
        Self::from_pieces(region.disjuncts().iter().map(|p| (p.clone(), value.clone())))
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    /// The union of the piece regions.
    pub fn support(&self) -> Region {
        Region::from_disjoint(self.pieces.iter().map(|p| p.region.clone()).collect())
    }

    pub fn evaluate(&self, env: &impl Valuation) -> Rational {
        self.pieces
            .iter()
            .find(|p| p.region.contains(env))
            .map(|p| p.value.eval(env))
            .unwrap_or_else(Rational::zero)
    }

    /// Pieces covering exactly `within`, with explicit zero pieces where the
    /// expression is implicitly zero.
    pub fn total_within(&self, within: &Region) -> Vec<Piece> {
        let mut out = Vec::new();
        for w in within.disjuncts() {
            for p in &self.pieces {
                let r = w.intersect(&p.region);
                if !r.is_empty() {
                    out.push(Piece {
                        region: r,
                        value: p.value.clone(),
                    });
                }
            }
        }
        let rest = within.subtract(&self.support());
        out.extend(rest.into_disjuncts().into_iter().map(|region| Piece {
            region,
            value: MinExpr::zero(),
        }));
        out
    }

    pub fn restrict(&self, within: &Region) -> PiecewiseExpr {
        let mut out = Vec::new();
        for w in within.disjuncts() {
            for p in &self.pieces {
                out.push((w.intersect(&p.region), p.value.clone()));
            }
        }
        Self::from_pieces(out)
    }

    /// Disjoint union with an expression whose support does not meet this one.
    pub fn join_disjoint(&self, other: &PiecewiseExpr) -> PiecewiseExpr {
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        pieces.sort();
        PiecewiseExpr { pieces }
    }

    pub fn scale(&self, k: &Rational) -> PiecewiseExpr {
        if k.is_zero() {
            return Self::zero();
        }
        Self::from_pieces(
            self.pieces
                .iter()
                .map(|p| (p.region.clone(), p.value.scale(k))),
        )
    }

    /// `x ∘ E` for the simultaneous substitution `f`.
    pub fn substitute(&self, f: impl Fn(&Var) -> Option<LinExpr>) -> PiecewiseExpr {
        Self::from_pieces(
            self.pieces
                .iter()
                .map(|p| (p.region.substitute(&f), p.value.substitute(&f))),
        )
    }

    fn overlay(
        &self,
        other: &PiecewiseExpr,
        within: &Region,
        op: impl Fn(&MinExpr, &MinExpr) -> MinExpr,
    ) -> PiecewiseExpr {
        let a = self.total_within(within);
        let b = other.total_within(within);
        let mut out = Vec::new();
        for pa in &a {
            for pb in &b {
                let r = pa.region.intersect(&pb.region);
                if !r.is_empty() {
                    out.push((r, op(&pa.value, &pb.value)));
                }
            }
        }
        Self::from_pieces(out)
    }

    /// Pointwise sum on `within` (zero outside).
    pub fn add_within(&self, other: &PiecewiseExpr, within: &Region) -> PiecewiseExpr {
        if self.is_zero() {
            return other.restrict(within);
        }
        if other.is_zero() {
            return self.restrict(within);
        }
        self.overlay(other, within, MinExpr::add)
    }

    /// Pointwise minimum on `within` (zero outside).
    pub fn min_within(&self, other: &PiecewiseExpr, within: &Region) -> PiecewiseExpr {
        self.overlay(other, within, MinExpr::min)
    }

    /// Removes redundant terms and merges pieces with equal values whose
    /// regions differ only in one complementary facet.
    pub fn simplify(&self) -> PiecewiseExpr {
        let mut pieces: Vec<Piece> = self
            .pieces
            .iter()
            .map(|p| Piece {
                region: p.region.clone(),
                value: p.value.prune(&p.region),
            })
            .collect();
        loop {
            let mut merged = None;
            'search: for i in 0..pieces.len() {
                for j in i + 1..pieces.len() {
                    if pieces[i].value != pieces[j].value {
                        continue;
                    }
                    if let Some(r) = merge_facet(&pieces[i].region, &pieces[j].region) {
                        merged = Some((i, j, r));
                        break 'search;
                    }
                }
            }
            match merged {
                Some((i, j, region)) => {
                    let value = pieces[i].value.clone();
                    pieces.remove(j);
                    pieces[i] = Piece { region, value };
                }
                None => break,
            }
        }
        pieces.sort();
        PiecewiseExpr { pieces }
    }
}

/// `P ∪ Q` when `P = R ∧ c` and `Q = R ∧ ¬c` for a single constraint `c`.
fn merge_facet(p: &Polyhedron, q: &Polyhedron) -> Option<Polyhedron> {
    let pc = p.constraints();
    let qc = q.constraints();
    if pc.len() != qc.len() {
        return None;
    }
    let only_p: Vec<_> = pc.iter().filter(|c| !qc.contains(c)).collect();
    let only_q: Vec<_> = qc.iter().filter(|c| !pc.contains(c)).collect();
    if let ([a], [b]) = (only_p.as_slice(), only_q.as_slice()) {
        let neg = Polyhedron::new(a.negate());
        if a.negate().len() == 1 && neg.constraints() == [(*b).clone()] {
            return Some(Polyhedron::new(pc.iter().filter(|c| c != a).cloned()));
        }
    }
    None
}

/// `a(s) ≤ b(s)` for every rational `s` in `within`.
pub fn pw_dominates(a: &PiecewiseExpr, b: &PiecewiseExpr, within: &Region) -> bool {
    let ta = a.total_within(within);
    let tb = b.total_within(within);
    for pa in &ta {
        for pb in &tb {
            let cell = pa.region.intersect(&pb.region);
            if cell.is_empty() {
                continue;
            }
            for h in pb.value.terms() {
                if !min_dominates(pa.value.terms(), h, &cell) {
                    return false;
                }
            }
        }
    }
    true
}

pub fn pw_evaluate(x: &PiecewiseExpr, env: &impl Valuation) -> Rational {
    x.evaluate(env)
}

impl fmt::Display for PiecewiseExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return f.write_str("0");
        }
        if let [p] = self.pieces.as_slice() {
            if p.region.is_universe() {
                return write!(f, "{}", p.value);
            }
        }
        let parts: Vec<String> = self
            .pieces
            .iter()
            .map(|p| format!("{} : {}", p.region, p.value))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl fmt::Debug for PiecewiseExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
