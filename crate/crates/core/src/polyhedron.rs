//! Convex polyhedra over integer-valued variables and finite unions of them.
//!
//! Constraints are kept in integer normal form (see [`LinConstraint::normalize`]),
//! so a polyhedron is a canonical, sorted, duplicate-free conjunction. Emptiness
//! is decided over the rational relaxation with the exact simplex.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;

use crate::linexpr::{LinConstraint, LinExpr, Normalized, Relation, Valuation, Var};
use crate::lp::{Bound, Cmp, LinearProgram};
use crate::rational::{self, Rational};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polyhedron {
    constraints: Vec<LinConstraint>,
}

fn falsum() -> LinConstraint {
    LinConstraint::new(LinExpr::int(1), Relation::Le)
}

impl Polyhedron {
    pub fn universe() -> Self {
        Polyhedron {
            constraints: Vec::new(),
        }
    }

    /// The canonical empty polyhedron `{1 ≤ 0}`.
    pub fn empty() -> Self {
        Polyhedron {
            constraints: vec![falsum()],
        }
    }

    pub fn new(constraints: impl IntoIterator<Item = LinConstraint>) -> Self {
        // Bounds on each linear form `L` (constant-free, first coefficient
        // positive): `lo ≤ L ≤ hi`, or `L = v`.
        #[derive(Default)]
        struct Bounds {
            lo: Option<Rational>,
            hi: Option<Rational>,
            eq: Option<Rational>,
        }
        let mut forms: BTreeMap<LinExpr, Bounds> = BTreeMap::new();
        for c in constraints {
            let c = match c.normalize() {
                Normalized::True => continue,
                Normalized::False => return Self::empty(),
                Normalized::Constraint(c) => c,
            };
            let constant = c.expr.constant_term().clone();
            let mut linear = c.expr.clone() - LinExpr::constant(constant.clone());
            let positive = linear
                .coeffs()
                .next()
                .is_some_and(|(_, a)| *a > Rational::zero());
            if !positive {
                linear = -linear;
            }
            // c.expr = s·L + constant
            let b = forms.entry(linear).or_default();
            match (c.relation, positive) {
                (Relation::Eq, _) => {
                    let v = if positive { -constant } else { constant };
                    if b.eq.as_ref().is_some_and(|w| *w != v) {
                        return Self::empty();
                    }
                    b.eq = Some(v);
                }
                (_, true) => {
                    let v = -constant;
                    if b.hi.as_ref().is_none_or(|h| v < *h) {
                        b.hi = Some(v);
                    }
                }
                (_, false) => {
                    if b.lo.as_ref().is_none_or(|l| constant > *l) {
                        b.lo = Some(constant);
                    }
                }
            }
        }
        let mut out = Vec::new();
        for (linear, b) in forms {
            let upper = |v: &Rational| LinConstraint::new(&linear - &LinExpr::constant(v.clone()), Relation::Le);
            let lower = |v: &Rational| LinConstraint::new(&LinExpr::constant(v.clone()) - &linear, Relation::Le);
            let fixed = match (&b.eq, &b.lo, &b.hi) {
                (Some(v), lo, hi) => {
                    if lo.as_ref().is_some_and(|l| l > v) || hi.as_ref().is_some_and(|h| h < v) {
                        return Self::empty();
                    }
                    Some(v.clone())
                }
                (None, Some(l), Some(h)) if l == h => Some(l.clone()),
                (None, Some(l), Some(h)) if l > h => return Self::empty(),
                _ => None,
            };
            let parts = match fixed {
                Some(v) => vec![LinConstraint::new(&linear - &LinExpr::constant(v), Relation::Eq)],
                None => b.hi.iter().map(upper).chain(b.lo.iter().map(lower)).collect(),
            };
            for c in parts {
                match c.normalize() {
                    Normalized::True => {}
                    Normalized::False => return Self::empty(),
                    Normalized::Constraint(c) => out.push(c),
                }
            }
        }
        out.sort();
        out.dedup();
        Polyhedron { constraints: out }
    }

    pub fn constraints(&self) -> &[LinConstraint] {
        &self.constraints
    }

    pub fn is_universe(&self) -> bool {
        self.constraints.is_empty()
    }

    fn is_trivially_empty(&self) -> bool {
        self.constraints.len() == 1 && self.constraints[0] == falsum()
    }

    pub fn with(&self, c: LinConstraint) -> Self {
        Self::new(self.constraints.iter().cloned().chain([c]))
    }

    pub fn intersect(&self, other: &Polyhedron) -> Self {
        Self::new(self.constraints.iter().chain(&other.constraints).cloned())
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.constraints
            .iter()
            .flat_map(|c| c.expr.vars().cloned())
            .collect()
    }

    pub fn contains(&self, env: &impl Valuation) -> bool {
        self.constraints.iter().all(|c| c.holds(env))
    }

    /// True iff there is no rational point satisfying all constraints.
    pub fn is_empty(&self) -> bool {
        if self.is_trivially_empty() {
            return true;
        }
        if self.constraints.is_empty() {
            return false;
        }
        let vars: Vec<Var> = self.vars().into_iter().collect();
        let (lp, _) = self.to_lp(&vars);
        !lp.is_feasible()
    }

    /// An LP with one free column per variable in `vars` (in order) and one row
    /// per constraint.
    pub fn to_lp(&self, vars: &[Var]) -> (LinearProgram, BTreeMap<Var, usize>) {
        let mut lp = LinearProgram::new();
        let index: BTreeMap<Var, usize> = vars
            .iter()
            .map(|v| (v.clone(), lp.add_var(Bound::Free)))
            .collect();
        for c in &self.constraints {
            let (coeffs, cmp, rhs) = constraint_row(c, &index);
            lp.add_row(coeffs, cmp, rhs);
        }
        (lp, index)
    }

    pub fn substitute(&self, f: impl Fn(&Var) -> Option<LinExpr>) -> Polyhedron {
        Polyhedron::new(self.constraints.iter().map(|c| c.substitute(&f)))
    }

    /// `self \ other` as pairwise-disjoint polyhedra (empty pieces dropped).
    pub fn subtract(&self, other: &Polyhedron) -> Vec<Polyhedron> {
        if self.intersect(other).is_empty() {
            return if self.is_empty() { vec![] } else { vec![self.clone()] };
        }
        let mut out = Vec::new();
        let mut rest = self.clone();
        for c in &other.constraints {
            for d in c.negate() {
                let piece = rest.with(d);
                if !piece.is_empty() {
                    out.push(piece);
                }
            }
            rest = rest.with(c.clone());
        }
        out
    }

    /// Vertices of `self ∩ [lo, hi]^vars`, in a deterministic order.
    pub fn box_vertices(&self, vars: &[Var], lo: i64, hi: i64) -> Vec<BTreeMap<Var, Rational>> {
        let d = vars.len();
        if d == 0 || self.is_trivially_empty() {
            return Vec::new();
        }
        let index: BTreeMap<&Var, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        // Hyperplanes a·x = b.
        let mut planes: Vec<(Vec<Rational>, Rational)> = Vec::new();
        for c in &self.constraints {
            let mut a = vec![Rational::zero(); d];
            for (v, k) in c.expr.coeffs() {
                match index.get(v) {
                    Some(&i) => a[i] = k.clone(),
                    None => return Vec::new(),
                }
            }
            planes.push((a, -c.expr.constant_term().clone()));
        }
        for i in 0..d {
            for bound in [lo, hi] {
                let mut a = vec![Rational::zero(); d];
                a[i] = rational::int(1);
                planes.push((a, rational::int(bound)));
            }
        }
        let boxed = self.intersect(&Polyhedron::new(vars.iter().flat_map(|v| {
            [
                LinConstraint::ge(LinExpr::var(v.clone()), LinExpr::int(lo)),
                LinConstraint::le(LinExpr::var(v.clone()), LinExpr::int(hi)),
            ]
        })));
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for combo in combinations(planes.len(), d) {
            let rows: Vec<&(Vec<Rational>, Rational)> = combo.iter().map(|&i| &planes[i]).collect();
            let Some(x) = solve_square(&rows) else {
                continue;
            };
            let point: BTreeMap<Var, Rational> =
                vars.iter().cloned().zip(x.iter().cloned()).collect();
            if boxed.contains(&point) && seen.insert(x) {
                out.push(point);
            }
        }
        out
    }
}

pub(crate) fn constraint_row(
    c: &LinConstraint,
    index: &BTreeMap<Var, usize>,
) -> (Vec<(usize, Rational)>, Cmp, Rational) {
    let coeffs = c.expr.coeffs().map(|(v, k)| (index[v], k.clone())).collect();
    let cmp = match c.relation {
        Relation::Le | Relation::Lt => Cmp::Le,
        Relation::Eq => Cmp::Eq,
    };
    (coeffs, cmp, -c.expr.constant_term().clone())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Solves a square system by Gaussian elimination; `None` when singular.
fn solve_square(rows: &[&(Vec<Rational>, Rational)]) -> Option<Vec<Rational>> {
    let d = rows.len();
    let mut m: Vec<Vec<Rational>> = rows
        .iter()
        .map(|(a, b)| a.iter().cloned().chain([b.clone()]).collect())
        .collect();
    for col in 0..d {
        let p = (col..d).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, p);
        let pivot = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v /= &pivot;
        }
        for r in 0..d {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let (pivot_row, row) = if r < col {
                    let (a, b) = m.split_at_mut(col);
                    (&b[0], &mut a[r])
                } else {
                    let (a, b) = m.split_at_mut(r);
                    (&a[col], &mut b[0])
                };
                for (x, p) in row[col..=d].iter_mut().zip(&pivot_row[col..=d]) {
                    *x -= &f * p;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[d].clone()).collect())
}

impl fmt::Display for Polyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.constraints.is_empty() {
            return f.write_str("true");
        }
        if self.is_trivially_empty() {
            return f.write_str("false");
        }
        let parts: Vec<String> = self.constraints.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(" && "))
    }
}

impl fmt::Debug for Polyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// A finite union of polyhedra.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    disjuncts: Vec<Polyhedron>,
}

impl Region {
    pub fn empty() -> Self {
        Region {
            disjuncts: Vec::new(),
        }
    }

    pub fn universe() -> Self {
        Region::from_poly(Polyhedron::universe())
    }

    pub fn from_poly(p: Polyhedron) -> Self {
        if p.is_empty() {
            Region::empty()
        } else {
            Region { disjuncts: vec![p] }
        }
    }

    /// Wraps disjuncts that the caller guarantees are pairwise disjoint.
    pub fn from_disjoint(disjuncts: Vec<Polyhedron>) -> Self {
        Region {
            disjuncts: disjuncts.into_iter().filter(|p| !p.is_empty()).collect(),
        }
    }

    /// Builds a region from possibly-overlapping polyhedra, making them disjoint.
    pub fn from_union(polys: impl IntoIterator<Item = Polyhedron>) -> Self {
        let mut out = Region::empty();
        for p in polys {
            out = out.union(&Region::from_poly(p));
        }
        out
    }

    pub fn disjuncts(&self) -> &[Polyhedron] {
        &self.disjuncts
    }

    pub fn into_disjuncts(self) -> Vec<Polyhedron> {
        self.disjuncts
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.iter().all(|p| p.is_empty())
    }

    pub fn contains(&self, env: &impl Valuation) -> bool {
        self.disjuncts.iter().any(|p| p.contains(env))
    }

    pub fn intersect(&self, other: &Region) -> Region {
        let mut out = Vec::new();
        for a in &self.disjuncts {
            for b in &other.disjuncts {
                let p = a.intersect(b);
                if !p.is_empty() {
                    out.push(p);
                }
            }
        }
        Region { disjuncts: out }
    }

    pub fn intersect_poly(&self, p: &Polyhedron) -> Region {
        self.intersect(&Region {
            disjuncts: vec![p.clone()],
        })
    }

    pub fn subtract(&self, other: &Region) -> Region {
        let mut pieces = self.disjuncts.clone();
        for o in &other.disjuncts {
            pieces = pieces.iter().flat_map(|p| p.subtract(o)).collect();
        }
        Region { disjuncts: pieces }
    }

    pub fn complement(&self) -> Region {
        Region::universe().subtract(self)
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut out = self.disjuncts.clone();
        out.extend(other.subtract(self).disjuncts);
        Region { disjuncts: out }
    }

    /// True iff `other ⊆ self` over the rationals.
    pub fn covers(&self, other: &Region) -> bool {
        other.subtract(self).is_empty()
    }

    pub fn substitute(&self, f: impl Fn(&Var) -> Option<LinExpr>) -> Region {
        Region::from_disjoint(self.disjuncts.iter().map(|p| p.substitute(&f)).collect())
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.disjuncts.iter().flat_map(|p| p.vars()).collect()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.disjuncts.is_empty() {
            return f.write_str("false");
        }
        let parts: Vec<String> = self
            .disjuncts
            .iter()
            .map(|p| {
                if self.disjuncts.len() > 1 && p.constraints().len() > 1 {
                    format!("({p})")
                } else {
                    p.to_string()
                }
            })
            .collect();
        f.write_str(&parts.join(" || "))
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Shorthand constructors used throughout the tests.
pub fn le(lhs: LinExpr, rhs: LinExpr) -> LinConstraint {
    LinConstraint::le(lhs, rhs)
}

pub fn ge(lhs: LinExpr, rhs: LinExpr) -> LinConstraint {
    LinConstraint::ge(lhs, rhs)
}

pub fn eq(lhs: LinExpr, rhs: LinExpr) -> LinConstraint {
    LinConstraint::eq(lhs, rhs)
}
