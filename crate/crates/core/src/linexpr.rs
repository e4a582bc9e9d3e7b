//! Affine expressions and linear constraints over named integer variables.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::{self, Rational};

/// A program variable (or symbolic constant).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Self {
        Var(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

/// Something that assigns a value to every variable. Unknown variables read as zero.
pub trait Valuation {
    fn value(&self, var: &Var) -> Rational;
}

impl Valuation for BTreeMap<Var, Rational> {
    fn value(&self, var: &Var) -> Rational {
        self.get(var).cloned().unwrap_or_else(Rational::zero)
    }
}

impl Valuation for BTreeMap<Var, i64> {
    fn value(&self, var: &Var) -> Rational {
        rational::int(self.get(var).copied().unwrap_or(0))
    }
}

/// Builds a valuation from `(name, value)` pairs.
pub fn state(pairs: &[(&str, i64)]) -> BTreeMap<Var, Rational> {
    pairs
        .iter()
        .map(|(v, x)| (Var::new(v), rational::int(*x)))
        .collect()
}

/// `Σ coeffs[v]·v + constant`, with zero coefficients never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LinExpr {
    coeffs: BTreeMap<Var, Rational>,
    constant: Rational,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn int(c: i64) -> Self {
        Self::constant(rational::int(c))
    }

    pub fn var(v: impl Into<Var>) -> Self {
        Self::term(Rational::one(), v)
    }

    pub fn term(c: Rational, v: impl Into<Var>) -> Self {
        let mut e = Self::zero();
        e.add_term(v.into(), c);
        e
    }

    /// Builds `Σ c·v + constant` from integer data; handy in tests.
    pub fn from_ints(terms: &[(i64, &str)], constant: i64) -> Self {
        let mut e = Self::int(constant);
        for (c, v) in terms {
            e.add_term(Var::new(v), rational::int(*c));
        }
        e
    }

    pub fn add_term(&mut self, v: Var, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(v.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn coeff(&self, v: &Var) -> Rational {
        self.coeffs.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> &Rational {
        &self.constant
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Var, &Rational)> {
        self.coeffs.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    pub fn scale(&self, k: &Rational) -> LinExpr {
        if k.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn eval(&self, env: &impl Valuation) -> Rational {
        self.coeffs
            .iter()
            .fold(self.constant.clone(), |acc, (v, c)| acc + c * env.value(v))
    }

    /// Replaces every variable `v` by `f(v)` (or keeps it when `f` returns `None`).
    pub fn substitute(&self, f: impl Fn(&Var) -> Option<LinExpr>) -> LinExpr {
        let mut out = LinExpr::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            match f(v) {
                Some(e) => out = out + e.scale(c),
                None => out.add_term(v.clone(), c.clone()),
            }
        }
        out
    }

    /// Multiplies through by the least common denominator so that every
    /// coefficient (and the constant) is an integer.
    pub fn clear_denominators(&self) -> (LinExpr, BigInt) {
        let lcm = rational::denominator_lcm(self.coeffs.values().chain([&self.constant]));
        (self.scale(&Rational::from_integer(lcm.clone())), lcm)
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        for (v, c) in rhs.coeffs {
            self.add_term(v, c);
        }
        self.constant += rhs.constant;
        self
    }
}

impl Add<&LinExpr> for &LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: &LinExpr) -> LinExpr {
        self.clone() + rhs.clone()
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + (-rhs)
    }
}

impl Sub<&LinExpr> for &LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: &LinExpr) -> LinExpr {
        self.clone() - rhs.clone()
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scale(&-Rational::one())
    }
}

impl Mul<&Rational> for &LinExpr {
    type Output = LinExpr;
    fn mul(self, k: &Rational) -> LinExpr {
        self.scale(k)
    }
}

fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            let (neg, mag) = (c.is_negative(), c.abs());
            match (first, neg) {
                (true, true) => f.write_str("-")?,
                (true, false) => {}
                (false, true) => f.write_str(" - ")?,
                (false, false) => f.write_str(" + ")?,
            }
            if mag.is_one() {
                write!(f, "{v}")?;
            } else if mag.is_integer() {
                write!(f, "{}*{v}", mag.numer())?;
            } else {
                write!(f, "{}*{v}/{}", mag.numer(), mag.denom())?;
            }
            first = false;
        }
        if first {
            return f.write_str(&fmt_rational(&self.constant));
        }
        if !self.constant.is_zero() {
            let sign = if self.constant.is_negative() { " - " } else { " + " };
            write!(f, "{sign}{}", fmt_rational(&self.constant.abs()))?;
        }
        Ok(())
    }
}

impl fmt::Debug for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Relation of a constraint `expr ⋈ 0`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Relation {
    Le,
    Lt,
    Eq,
}

/// `expr ⋈ 0` for `⋈ ∈ {≤, <, =}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinConstraint {
    pub expr: LinExpr,
    pub relation: Relation,
}

/// Outcome of normalizing a constraint over the integers.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Normalized {
    True,
    False,
    Constraint(LinConstraint),
}

impl LinConstraint {
    pub fn new(expr: LinExpr, relation: Relation) -> Self {
        LinConstraint { expr, relation }
    }

    /// `lhs ≤ rhs`
    pub fn le(lhs: LinExpr, rhs: LinExpr) -> Self {
        Self::new(lhs - rhs, Relation::Le)
    }

    /// `lhs < rhs`
    pub fn lt(lhs: LinExpr, rhs: LinExpr) -> Self {
        Self::new(lhs - rhs, Relation::Lt)
    }

    /// `lhs = rhs`
    pub fn eq(lhs: LinExpr, rhs: LinExpr) -> Self {
        Self::new(lhs - rhs, Relation::Eq)
    }

    /// `lhs ≥ rhs`
    pub fn ge(lhs: LinExpr, rhs: LinExpr) -> Self {
        Self::le(rhs, lhs)
    }

    pub fn holds(&self, env: &impl Valuation) -> bool {
        let v = self.expr.eval(env);
        match self.relation {
            Relation::Le => !v.is_positive(),
            Relation::Lt => v.is_negative(),
            Relation::Eq => v.is_zero(),
        }
    }

    /// Integer normal form: integer coefficients with gcd 1, strict inequalities
    /// turned into `e + 1 ≤ 0`, constants rounded inward, equalities with a
    /// positive leading coefficient. Valid because every variable ranges over ℤ.
    pub fn normalize(&self) -> Normalized {
        let (expr, _) = self.expr.clear_denominators();
        let mut relation = self.relation;
        let mut expr = expr;
        if relation == Relation::Lt {
            expr = expr + LinExpr::int(1);
            relation = Relation::Le;
        }
        let g = expr
            .coeffs
            .values()
            .fold(BigInt::zero(), |acc, c| acc.gcd(c.numer()));
        if g.is_zero() {
            let c = &expr.constant;
            let ok = match relation {
                Relation::Le | Relation::Lt => !c.is_positive(),
                Relation::Eq => c.is_zero(),
            };
            return if ok { Normalized::True } else { Normalized::False };
        }
        let gq = Rational::from_integer(g.clone());
        let constant = expr.constant.numer().clone();
        let coeffs: BTreeMap<Var, Rational> = expr
            .coeffs
            .iter()
            .map(|(v, c)| (v.clone(), c / &gq))
            .collect();
        let constant = match relation {
            // Σ a·x + c ≤ 0  ⇔  Σ (a/g)·x ≤ -c/g  ⇔  Σ (a/g)·x + ⌈c/g⌉ ≤ 0
            Relation::Le | Relation::Lt => Rational::from_integer(constant.div_ceil(&g)),
            Relation::Eq => {
                if !(&constant % &g).is_zero() {
                    return Normalized::False;
                }
                Rational::from_integer(constant / &g)
            }
        };
        let mut expr = LinExpr { coeffs, constant };
        if relation == Relation::Eq && expr.coeffs.values().next().is_some_and(|c| c.is_negative())
        {
            expr = -expr;
        }
        Normalized::Constraint(LinConstraint { expr, relation })
    }

    /// Integer negation as a disjunction of normalized constraints.
    pub fn negate(&self) -> Vec<LinConstraint> {
        match self.relation {
            // ¬(e ≤ 0) ⇔ -e < 0
            Relation::Le => vec![LinConstraint::new(-self.expr.clone(), Relation::Lt)],
            Relation::Lt => vec![LinConstraint::new(-self.expr.clone(), Relation::Le)],
            Relation::Eq => vec![
                LinConstraint::new(self.expr.clone(), Relation::Lt),
                LinConstraint::new(-self.expr.clone(), Relation::Lt),
            ],
        }
    }

    pub fn substitute(&self, f: impl Fn(&Var) -> Option<LinExpr>) -> LinConstraint {
        LinConstraint::new(self.expr.substitute(f), self.relation)
    }
}

impl fmt::Display for LinConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Print as `lhs op rhs` with the constant moved to the right.
        let rhs = LinExpr::constant(-self.expr.constant.clone());
        let lhs = LinExpr {
            coeffs: self.expr.coeffs.clone(),
            constant: Rational::zero(),
        };
        let op = match self.relation {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "=",
        };
        write!(f, "{lhs} {op} {rhs}")
    }
}

impl fmt::Debug for LinConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn zero_coefficients_vanish() {
        let e = LinExpr::from_ints(&[(1, "x"), (2, "y")], 3) - LinExpr::from_ints(&[(1, "x")], 0);
        assert_eq!(e, LinExpr::from_ints(&[(2, "y")], 3));
        assert!(e.coeff(&Var::new("x")).is_zero());
    }

    #[test]
    fn strict_constraints_tighten_over_integers() {
        // 2x - 1 < 0  ⇔  x ≤ 0
        let c = LinConstraint::new(LinExpr::from_ints(&[(2, "x")], -1), Relation::Lt);
        assert_eq!(
            c.normalize(),
            Normalized::Constraint(LinConstraint::new(LinExpr::var("x"), Relation::Le))
        );
        // x/2 + 1/3 ≤ 0  ⇔  3x + 2 ≤ 0  ⇔  x ≤ -1
        let c = LinConstraint::new(
            LinExpr::term(ratio(1, 2), "x") + LinExpr::constant(ratio(1, 3)),
            Relation::Le,
        );
        assert_eq!(
            c.normalize(),
            Normalized::Constraint(LinConstraint::new(
                LinExpr::from_ints(&[(1, "x")], 1),
                Relation::Le
            ))
        );
        // 2x = 1 has no integer solution
        let c = LinConstraint::new(LinExpr::from_ints(&[(2, "x")], -1), Relation::Eq);
        assert_eq!(c.normalize(), Normalized::False);
        assert_eq!(
            LinConstraint::new(LinExpr::int(-1), Relation::Le).normalize(),
            Normalized::True
        );
    }

    #[test]
    fn display_is_readable() {
        let e = LinExpr::from_ints(&[(1, "c"), (-2, "b")], 1);
        assert_eq!(e.to_string(), "-2*b + c + 1");
        assert_eq!(LinExpr::term(ratio(3, 4), "c").to_string(), "3*c/4");
        assert_eq!(LinExpr::int(0).to_string(), "0");
        let c = LinConstraint::le(LinExpr::var("b"), LinExpr::var("c"));
        assert_eq!(c.to_string(), "b - c <= 0");
        assert_eq!(e.eval(&state(&[("c", 5), ("b", 2)])), int(2));
    }
}
