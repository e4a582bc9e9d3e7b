//! Dominance of affine functions over a polyhedron, decided by affine Farkas
//! certificates.
//!
//! For a nonempty polyhedron `P = {x : e_k(x) ≤ 0, e_l(x) = 0}`, `g ≤ h` holds on
//! all of `P` iff there are multipliers `λ_k ≥ 0`, `λ_l` free and a slack
//! `c0 ≥ 0` with
//!
//! ```text
//! h - g = Σ λ_k·(-e_k) + Σ λ_l·(-e_l) + c0
//! ```
//!
//! as an identity of affine functions. Finding the multipliers is a linear
//! feasibility problem; checking them is pure exact arithmetic.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};

use crate::error::{CoreError, Result};
use crate::linexpr::{LinExpr, Relation, Var};
use crate::lp::{Bound, Cmp, LinearProgram, LpOutcome};
use crate::polyhedron::Polyhedron;
use crate::rational::Rational;

/// Multipliers proving `g ≤ h` on a polyhedron, one per constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct FarkasCertificate {
    pub multipliers: Vec<Rational>,
    pub slack: Rational,
}

impl FarkasCertificate {
    /// Checks the certificate identity exactly.
    pub fn verify(&self, g: &LinExpr, h: &LinExpr, p: &Polyhedron) -> bool {
        if self.multipliers.len() != p.constraints().len() || self.slack.is_negative() {
            return false;
        }
        let mut combo = LinExpr::constant(self.slack.clone());
        for (lambda, c) in self.multipliers.iter().zip(p.constraints()) {
            if c.relation != Relation::Eq && lambda.is_negative() {
                return false;
            }
            combo = combo - c.expr.scale(lambda);
        }
        combo == h - g
    }
}

/// Adds to `lp` the Farkas multipliers proving `target ≥ 0` on `p`, i.e. the
/// identity `target = Σ λ·(-e) + c0`, where
/// `target = fixed - Σ sign·column` may depend on LP columns. `columns` maps
/// each variable (`None` for the constant term) to its `(column, sign)` list.
/// Returns the multiplier and slack columns.
pub(crate) fn add_farkas_rows(
    lp: &mut LinearProgram,
    p: &Polyhedron,
    fixed: &LinExpr,
    columns: &BTreeMap<Option<Var>, Vec<(usize, Rational)>>,
) -> (Vec<usize>, usize) {
    let lambdas: Vec<usize> = p
        .constraints()
        .iter()
        .map(|c| {
            lp.add_var(if c.relation == Relation::Eq {
                Bound::Free
            } else {
                Bound::NonNegative
            })
        })
        .collect();
    let slack = lp.add_var(Bound::NonNegative);
    let mut keys: BTreeSet<Option<Var>> = columns.keys().cloned().collect();
    keys.extend(fixed.vars().cloned().map(Some));
    keys.extend(p.vars().into_iter().map(Some));
    keys.insert(None);
    for key in keys {
        // Σ sign·col - Σ λ_k·e_k[key] (+ c0 for the constant) = fixed[key]
        let mut row: Vec<(usize, Rational)> = columns.get(&key).cloned().unwrap_or_default();
        for (lambda, c) in lambdas.iter().zip(p.constraints()) {
            let a = match &key {
                Some(v) => c.expr.coeff(v),
                None => c.expr.constant_term().clone(),
            };
            if !a.is_zero() {
                row.push((*lambda, -a));
            }
        }
        let rhs = match &key {
            Some(v) => fixed.coeff(v),
            None => {
                row.push((slack, Rational::from_integer(1.into())));
                fixed.constant_term().clone()
            }
        };
        lp.add_row(row, Cmp::Eq, rhs);
    }
    (lambdas, slack)
}

/// Searches for a certificate of `g ≤ h` on `p`. `Ok(None)` means dominance fails.
pub fn farkas_certificate(
    g: &LinExpr,
    h: &LinExpr,
    p: &Polyhedron,
) -> Result<Option<FarkasCertificate>> {
    if p.is_empty() {
        return Err(CoreError::EmptyPolyhedron);
    }
    let mut lp = LinearProgram::new();
    let (lambdas, slack) = add_farkas_rows(&mut lp, p, &(h - g), &BTreeMap::new());
    match lp.solve() {
        LpOutcome::Optimal(sol) => {
            let cert = FarkasCertificate {
                multipliers: lambdas.iter().map(|&j| sol.x[j].clone()).collect(),
                slack: sol.x[slack].clone(),
            };
            debug_assert!(cert.verify(g, h, p));
            Ok(Some(cert))
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => unreachable!("feasibility problem has no objective"),
    }
}

/// `g(x) ≤ h(x)` for every rational `x ∈ p`.
pub fn farkas_dominates(g: &LinExpr, h: &LinExpr, p: &Polyhedron) -> Result<bool> {
    Ok(farkas_certificate(g, h, p)?.is_some())
}

/// Minimum of `h - g` over `p`, or `None` when unbounded below; the direct
/// optimization route used to cross-check certificates.
pub fn min_gap(g: &LinExpr, h: &LinExpr, p: &Polyhedron) -> Result<Option<Rational>> {
    if p.is_empty() {
        return Err(CoreError::EmptyPolyhedron);
    }
    let diff = h - g;
    let mut vars = p.vars();
    vars.extend(diff.vars().cloned());
    let vars: Vec<Var> = vars.into_iter().collect();
    let (mut lp, index) = p.to_lp(&vars);
    lp.minimize(diff.coeffs().map(|(v, c)| (index[v], c.clone())).collect());
    match lp.solve() {
        LpOutcome::Optimal(sol) => Ok(Some(sol.value + diff.constant_term())),
        LpOutcome::Unbounded => Ok(None),
        LpOutcome::Infeasible => Err(CoreError::EmptyPolyhedron),
    }
}

/// `min_t t(x) ≤ h(x)` for every rational `x ∈ p`, where `terms` is nonempty.
///
/// Dominance fails iff some point of `p` has every term strictly above `h`,
/// which is decided by maximizing `δ` subject to `t(x) ≥ h(x) + δ` for all `t`.
pub fn min_dominates(terms: &[LinExpr], h: &LinExpr, p: &Polyhedron) -> bool {
    assert!(!terms.is_empty(), "a min-expression has at least one term");
    if let [t] = terms {
        return match min_gap(t, h, p) {
            Ok(Some(gap)) => !gap.is_negative(),
            Ok(None) => false,
            Err(_) => true,
        };
    }
    let mut vars: BTreeSet<Var> = p.vars();
    vars.extend(h.vars().cloned());
    for t in terms {
        vars.extend(t.vars().cloned());
    }
    let vars: Vec<Var> = vars.into_iter().collect();
    let (mut lp, index) = p.to_lp(&vars);
    let delta = lp.add_var(Bound::Free);
    for t in terms {
        // (t - h)(x) - δ ≥ 0
        let d = t - h;
        let mut row: Vec<(usize, Rational)> = d.coeffs().map(|(v, c)| (index[v], c.clone())).collect();
        row.push((delta, -Rational::from_integer(1.into())));
        lp.add_row(row, Cmp::Ge, -d.constant_term().clone());
    }
    lp.maximize(vec![(delta, Rational::from_integer(1.into()))]);
    match lp.solve() {
        LpOutcome::Optimal(sol) => !sol.value.is_positive(),
        LpOutcome::Unbounded => false,
        LpOutcome::Infeasible => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedron::{ge, le};
    use crate::rational::ratio;

    fn v(name: &str) -> LinExpr {
        LinExpr::var(name)
    }

    #[test]
    fn difference_is_nonnegative_above_diagonal() {
        let p = Polyhedron::new([le(v("b"), v("c"))]);
        let cert = farkas_certificate(&LinExpr::zero(), &(v("c") - v("b")), &p)
            .unwrap()
            .unwrap();
        assert!(cert.verify(&LinExpr::zero(), &(v("c") - v("b")), &p));
    }

    #[test]
    fn witness_refutes_dominance() {
        let p = Polyhedron::new([ge(v("b"), LinExpr::int(1)), le(v("b"), v("c"))]);
        assert!(!farkas_dominates(&v("c"), &(v("c") - v("b")), &p).unwrap());
    }

    #[test]
    fn wedge_plane_lies_under_the_diagonal_piece() {
        // 3c/4 + b/4 stays below c on b ≤ c < 3b, but not below c - b
        // (at b = c = 1 it is 1 > 0).
        let psi1 = Polyhedron::new([
            le(v("b"), v("c")),
            le(v("c"), v("b").scale(&ratio(3, 1)) - LinExpr::int(1)),
        ]);
        let g = v("c").scale(&ratio(3, 4)) + v("b").scale(&ratio(1, 4));
        assert!(farkas_dominates(&g, &v("c"), &psi1).unwrap());
        assert!(!farkas_dominates(&g, &(v("c") - v("b")), &psi1).unwrap());
    }

    #[test]
    fn empty_polyhedron_is_rejected() {
        let p = Polyhedron::new([le(v("x"), LinExpr::int(0)), ge(v("x"), LinExpr::int(1))]);
        assert_eq!(
            farkas_dominates(&v("x"), &v("x"), &p),
            Err(CoreError::EmptyPolyhedron)
        );
    }

    #[test]
    fn min_dominance_needs_the_joint_lp() {
        // On [0, 2]: min(x, 2 - x) ≤ 1 although neither term is ≤ 1 everywhere.
        let p = Polyhedron::new([ge(v("x"), LinExpr::int(0)), le(v("x"), LinExpr::int(2))]);
        let terms = [v("x"), LinExpr::int(2) - v("x")];
        assert!(min_dominates(&terms, &LinExpr::int(1), &p));
        assert!(!min_dominates(&terms, &LinExpr::zero(), &p));
        assert!(!farkas_dominates(&terms[0], &LinExpr::int(1), &p).unwrap());
    }
}
