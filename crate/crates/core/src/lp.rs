//! A small dense two-phase simplex over exact rationals.
//!
//! Pivoting follows Bland's rule (lowest-index entering column, lowest-index
//! leaving basic variable among ratio ties), so every solve terminates and is
//! deterministic: identical programs always return identical vertices.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// Coefficients by column, comparison and right-hand side.
type SparseRow = (Vec<(usize, Rational)>, Cmp, Rational);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Bound {
    NonNegative,
    Free,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, Rational)>,
    cmp: Cmp,
    rhs: Rational,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Sense {
    Minimize,
    Maximize,
}

/// `optimize c·x  s.t.  rows, bounds`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    bounds: Vec<Bound>,
    rows: Vec<Row>,
    objective: Vec<(usize, Rational)>,
    sense: Sense,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub value: Rational,
    pub x: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(Solution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<Solution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl Default for LinearProgram {
    fn default() -> Self {
        Self::new()
    }
}

impl LinearProgram {
    pub fn new() -> Self {
        LinearProgram {
            bounds: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            sense: Sense::Minimize,
        }
    }

    pub fn add_var(&mut self, bound: Bound) -> usize {
        self.bounds.push(bound);
        self.bounds.len() - 1
    }

    pub fn add_vars(&mut self, n: usize, bound: Bound) -> Vec<usize> {
        (0..n).map(|_| self.add_var(bound)).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds `Σ coeffs ⋈ rhs`. Repeated indices are summed.
    pub fn add_row(&mut self, coeffs: Vec<(usize, Rational)>, cmp: Cmp, rhs: Rational) {
        let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(coeffs.len());
        let mut coeffs = coeffs;
        coeffs.sort_by_key(|(j, _)| *j);
        for (j, c) in coeffs {
            assert!(j < self.bounds.len(), "row references unknown variable {j}");
            match merged.last_mut() {
                Some((k, acc)) if *k == j => *acc += c,
                _ => merged.push((j, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        self.rows.push(Row {
            coeffs: merged,
            cmp,
            rhs,
        });
    }

    pub fn minimize(&mut self, objective: Vec<(usize, Rational)>) {
        self.objective = objective;
        self.sense = Sense::Minimize;
    }

    pub fn maximize(&mut self, objective: Vec<(usize, Rational)>) {
        self.objective = objective;
        self.sense = Sense::Maximize;
    }

    pub fn is_feasible(&self) -> bool {
        let mut copy = self.clone();
        copy.objective.clear();
        !matches!(copy.solve(), LpOutcome::Infeasible)
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    /// m rows of `ncols + 1` entries, last entry = right-hand side.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
    /// For each original variable: (positive column, optional negative column).
    var_cols: Vec<(usize, Option<usize>)>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let mut kinds = Vec::new();
        let mut var_cols = Vec::with_capacity(lp.bounds.len());
        for b in &lp.bounds {
            let pos = kinds.len();
            kinds.push(ColKind::Structural);
            let neg = match b {
                Bound::Free => {
                    kinds.push(ColKind::Structural);
                    Some(pos + 1)
                }
                Bound::NonNegative => None,
            };
            var_cols.push((pos, neg));
        }
        // Sign-normalize rows so every right-hand side is nonnegative.
        let rows: Vec<SparseRow> = lp
            .rows
            .iter()
            .map(|r| {
                if r.rhs.is_negative() {
                    let cmp = match r.cmp {
                        Cmp::Le => Cmp::Ge,
                        Cmp::Ge => Cmp::Le,
                        Cmp::Eq => Cmp::Eq,
                    };
                    let coeffs = r.coeffs.iter().map(|(j, c)| (*j, -c)).collect();
                    (coeffs, cmp, -r.rhs.clone())
                } else {
                    (r.coeffs.clone(), r.cmp, r.rhs.clone())
                }
            })
            .collect();
        let mut extra = Vec::with_capacity(rows.len());
        for (_, cmp, _) in &rows {
            let slack = match cmp {
                Cmp::Le | Cmp::Ge => {
                    kinds.push(ColKind::Slack);
                    Some(kinds.len() - 1)
                }
                Cmp::Eq => None,
            };
            let art = match cmp {
                Cmp::Ge | Cmp::Eq => {
                    kinds.push(ColKind::Artificial);
                    Some(kinds.len() - 1)
                }
                Cmp::Le => None,
            };
            extra.push((slack, art));
        }
        let ncols = kinds.len();
        let mut t = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        for ((coeffs, cmp, rhs), (slack, art)) in rows.into_iter().zip(extra) {
            let mut row = vec![Rational::zero(); ncols + 1];
            for (j, c) in coeffs {
                let (pos, neg) = var_cols[j];
                if let Some(neg) = neg {
                    row[neg] = -c.clone();
                }
                row[pos] = c;
            }
            if let Some(s) = slack {
                row[s] = if cmp == Cmp::Le {
                    Rational::one()
                } else {
                    -Rational::one()
                };
            }
            if let Some(a) = art {
                row[a] = Rational::one();
            }
            row[ncols] = rhs;
            basis.push(art.or(slack).expect("every row has a slack or an artificial"));
            t.push(row);
        }
        Tableau {
            t,
            basis,
            kinds,
            var_cols,
        }
    }

    fn ncols(&self) -> usize {
        self.kinds.len()
    }

    /// Reduced-cost row for minimizing `cost` (length ncols), last entry = -z.
    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let n = self.ncols();
        let mut r: Vec<Rational> = cost.iter().cloned().chain([Rational::zero()]).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (j, rj) in r.iter_mut().enumerate().take(n + 1) {
                let tij = &self.t[i][j];
                if !tij.is_zero() {
                    *rj -= cb * tij;
                }
            }
        }
        r
    }

    fn pivot(&mut self, r: &mut [Rational], row: usize, col: usize) {
        let n = self.ncols();
        let p = self.t[row][col].clone();
        if !p.is_one() {
            for v in self.t[row].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
        }
        let nz: Vec<usize> = (0..=n).filter(|&j| !self.t[row][j].is_zero()).collect();
        let pivot_row = self.t[row].clone();
        for i in 0..self.t.len() {
            if i == row {
                continue;
            }
            let f = self.t[i][col].clone();
            if f.is_zero() {
                continue;
            }
            let target = &mut self.t[i];
            for &j in &nz {
                target[j] -= &f * &pivot_row[j];
            }
        }
        let f = r[col].clone();
        if !f.is_zero() {
            for &j in &nz {
                r[j] -= &f * &pivot_row[j];
            }
        }
        self.basis[row] = col;
    }

    /// Minimizes with the given reduced-cost row. Returns false when unbounded.
    fn optimize(&mut self, r: &mut [Rational], allowed: impl Fn(usize) -> bool) -> bool {
        let n = self.ncols();
        loop {
            let entering = (0..n).find(|&j| allowed(j) && r[j].is_negative());
            let Some(col) = entering else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.t.len() {
                let a = &self.t[i][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.t[i][n] / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((row, _)) = best else {
                return false;
            };
            self.pivot(r, row, col);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let n = self.ncols();
        // Phase 1: minimize the sum of artificial variables.
        if self.kinds.contains(&ColKind::Artificial) {
            let cost: Vec<Rational> = self
                .kinds
                .iter()
                .map(|k| {
                    if *k == ColKind::Artificial {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect();
            let mut r = self.reduced_costs(&cost);
            self.optimize(&mut r, |_| true);
            if !r[n].is_zero() {
                return LpOutcome::Infeasible;
            }
            // Drive remaining (zero-valued) artificials out of the basis.
            let mut i = 0;
            while i < self.t.len() {
                if self.kinds[self.basis[i]] == ColKind::Artificial {
                    let col = (0..n)
                        .find(|&j| self.kinds[j] != ColKind::Artificial && !self.t[i][j].is_zero());
                    match col {
                        Some(col) => {
                            let mut dummy = vec![Rational::zero(); n + 1];
                            self.pivot(&mut dummy, i, col);
                        }
                        None => {
                            self.t.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }
        // Phase 2.
        let mut cost = vec![Rational::zero(); n];
        for (j, c) in &lp.objective {
            let c = match lp.sense {
                Sense::Minimize => c.clone(),
                Sense::Maximize => -c.clone(),
            };
            let (pos, neg) = self.var_cols[*j];
            cost[pos] += &c;
            if let Some(neg) = neg {
                cost[neg] -= &c;
            }
        }
        let mut r = self.reduced_costs(&cost);
        let kinds = self.kinds.clone();
        if !self.optimize(&mut r, |j| kinds[j] != ColKind::Artificial) {
            return LpOutcome::Unbounded;
        }
        let mut col_value = vec![Rational::zero(); n];
        for (i, &b) in self.basis.iter().enumerate() {
            col_value[b] = self.t[i][n].clone();
        }
        let x: Vec<Rational> = self
            .var_cols
            .iter()
            .map(|&(pos, neg)| match neg {
                Some(neg) => &col_value[pos] - &col_value[neg],
                None => col_value[pos].clone(),
            })
            .collect();
        let value = lp
            .objective
            .iter()
            .fold(Rational::zero(), |acc, (j, c)| acc + c * &x[*j]);
        LpOutcome::Optimal(Solution { value, x })
    }
}
