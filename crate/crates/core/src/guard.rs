//! Boolean guard expressions over linear comparisons, their conversion to
//! regions, and the partition of the state space into guard atoms.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{CoreError, Result};
use crate::linexpr::{LinConstraint, LinExpr, Valuation, Var};
use crate::polyhedron::{Polyhedron, Region};

/// Default cap on the number of guards partitioned at once.
pub const DEFAULT_GUARD_CAP: usize = 16;
/// Cap on the number of disjuncts produced when expanding one guard.
pub const DNF_CAP: usize = 4096;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    /// The comparison as a disjunction of normalized-form constraints.
    fn constraints(self, lhs: &LinExpr, rhs: &LinExpr) -> Vec<LinConstraint> {
        let (l, r) = (lhs.clone(), rhs.clone());
        match self {
            CmpOp::Lt => vec![LinConstraint::lt(l, r)],
            CmpOp::Le => vec![LinConstraint::le(l, r)],
            CmpOp::Eq => vec![LinConstraint::eq(l, r)],
            CmpOp::Ge => vec![LinConstraint::le(r, l)],
            CmpOp::Gt => vec![LinConstraint::lt(r, l)],
            CmpOp::Ne => vec![LinConstraint::lt(l.clone(), r.clone()), LinConstraint::lt(r, l)],
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Guard {
    True,
    False,
    Cmp(LinExpr, CmpOp, LinExpr),
    Not(Box<Guard>),
    And(Vec<Guard>),
    Or(Vec<Guard>),
}

impl Guard {
    pub fn cmp(lhs: LinExpr, op: CmpOp, rhs: LinExpr) -> Guard {
        Guard::Cmp(lhs, op, rhs)
    }

    pub fn and(parts: Vec<Guard>) -> Guard {
        Guard::And(parts)
    }

    pub fn or(parts: Vec<Guard>) -> Guard {
        Guard::Or(parts)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(g: Guard) -> Guard {
        Guard::Not(Box::new(g))
    }

    pub fn eval(&self, env: &impl Valuation) -> bool {
        match self {
            Guard::True => true,
            Guard::False => false,
            Guard::Cmp(l, op, r) => {
                let (l, r) = (l.eval(env), r.eval(env));
                match op {
                    CmpOp::Lt => l < r,
                    CmpOp::Le => l <= r,
                    CmpOp::Eq => l == r,
                    CmpOp::Ne => l != r,
                    CmpOp::Ge => l >= r,
                    CmpOp::Gt => l > r,
                }
            }
            Guard::Not(g) => !g.eval(env),
            Guard::And(gs) => gs.iter().all(|g| g.eval(env)),
            Guard::Or(gs) => gs.iter().any(|g| g.eval(env)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Guard::True | Guard::False => {}
            Guard::Cmp(l, _, r) => {
                out.extend(l.vars().cloned());
                out.extend(r.vars().cloned());
            }
            Guard::Not(g) => g.collect_vars(out),
            Guard::And(gs) | Guard::Or(gs) => gs.iter().for_each(|g| g.collect_vars(out)),
        }
    }

    /// The set of states satisfying the guard, as pairwise-disjoint polyhedra.
    pub fn to_region(&self) -> Result<Region> {
        Ok(Region::from_union(self.dnf(true)?))
    }

    /// The set of states violating the guard (De Morgan, then DNF).
    pub fn complement_region(&self) -> Result<Region> {
        Ok(Region::from_union(self.dnf(false)?))
    }

    /// Disjunctive normal form of the guard (`positive`) or of its negation,
    /// with rationally-empty disjuncts pruned.
    fn dnf(&self, positive: bool) -> Result<Vec<Polyhedron>> {
        let out = match (self, positive) {
            (Guard::True, true) | (Guard::False, false) => vec![Polyhedron::universe()],
            (Guard::True, false) | (Guard::False, true) => vec![],
            (Guard::Cmp(l, op, r), _) => {
                let op = if positive { *op } else { op.negate() };
                op.constraints(l, r)
                    .into_iter()
                    .map(|c| Polyhedron::new([c]))
                    .filter(|p| !p.is_empty())
                    .collect()
            }
            (Guard::Not(g), _) => g.dnf(!positive)?,
            (Guard::And(gs), true) | (Guard::Or(gs), false) => {
                let mut acc = vec![Polyhedron::universe()];
                for g in gs {
                    let part = g.dnf(positive)?;
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &part {
                            let p = a.intersect(b);
                            if !p.is_empty() {
                                next.push(p);
                            }
                        }
                    }
                    if next.len() > DNF_CAP {
                        return Err(CoreError::DnfTooLarge { cap: DNF_CAP });
                    }
                    acc = next;
                }
                acc
            }
            (Guard::Or(gs), true) | (Guard::And(gs), false) => {
                let mut acc = Vec::new();
                for g in gs {
                    acc.extend(g.dnf(positive)?);
                    if acc.len() > DNF_CAP {
                        return Err(CoreError::DnfTooLarge { cap: DNF_CAP });
                    }
                }
                acc
            }
        };
        Ok(out)
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::True => f.write_str("true"),
            Guard::False => f.write_str("false"),
            Guard::Cmp(l, op, r) => write!(f, "{l} {} {r}", op.symbol()),
            Guard::Not(g) => write!(f, "!({g})"),
            Guard::And(gs) | Guard::Or(gs) => {
                let sep = if matches!(self, Guard::And(_)) { " && " } else { " || " };
                if gs.is_empty() {
                    return f.write_str(if matches!(self, Guard::And(_)) { "true" } else { "false" });
                }
                let parts: Vec<String> = gs.iter().map(|g| format!("({g})")).collect();
                f.write_str(&parts.join(sep))
            }
        }
    }
}

/// One cell `A_I` of the boolean algebra generated by a list of guards: the
/// states where exactly the guards indexed by `members` hold.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Atom {
    pub members: Vec<usize>,
    pub region: Region,
}

/// All nonempty atoms over `guards`, including the all-false atom when it is
/// nonempty. Atoms are pairwise disjoint and cover the space.
pub fn region_partition(guards: &[Guard], cap: usize) -> Result<Vec<Atom>> {
    if guards.len() > cap {
        return Err(CoreError::TooManyGuards {
            count: guards.len(),
            cap,
        });
    }
    let mut cells = vec![Atom {
        members: Vec::new(),
        region: Region::universe(),
    }];
    for (i, g) in guards.iter().enumerate() {
        let inside = g.to_region()?;
        let outside = g.complement_region()?;
        let mut next = Vec::with_capacity(cells.len() * 2);
        for cell in cells {
            let yes = cell.region.intersect(&inside);
            if !yes.is_empty() {
                let mut members = cell.members.clone();
                members.push(i);
                next.push(Atom {
                    members,
                    region: yes,
                });
            }
            let no = cell.region.intersect(&outside);
            if !no.is_empty() {
                next.push(Atom {
                    members: cell.members,
                    region: no,
                });
            }
        }
        cells = next;
    }
    cells.sort_by(|a, b| a.members.cmp(&b.members));
    Ok(cells)
}
