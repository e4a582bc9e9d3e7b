//! The symbolic expectation transformer on piecewise-linear-concave
//! expectations: one step of the loop body and the loop functional
//! `f.X = [G]·wp.X + [¬G]·β`.

use rayon::prelude::*;

use crate::piecewise::PiecewiseExpr;
use crate::program::{Cell, NormalizedProgram, ProbBranch};

/// `Σ_j p_j · (x ∘ E_j)` restricted to the cell.
fn branch_sum(cell: &Cell, branches: &[ProbBranch], x: &PiecewiseExpr) -> PiecewiseExpr {
    let mut acc = PiecewiseExpr::zero();
    for b in branches {
        let moved = x
            .substitute(b.assignment.as_substitution())
            .restrict(&cell.region)
            .scale(&b.probability);
        acc = acc.add_within(&moved, &cell.region);
    }
    acc
}

fn cell_step(cell: &Cell, x: &PiecewiseExpr) -> PiecewiseExpr {
    let mut values = cell.choices.iter().map(|bs| branch_sum(cell, bs, x));
    let first = values.next().expect("every cell enables a command");
    values
        .fold(first, |acc, v| acc.min_within(&v, &cell.region))
        .simplify()
}

/// One step of the loop body: on each cell, the demonic minimum over the
/// enabled commands of the probability-weighted successor values. Zero
/// outside the cells.
pub fn wp_step(np: &NormalizedProgram, x: &PiecewiseExpr) -> PiecewiseExpr {
    let parts: Vec<PiecewiseExpr> = np.cells.par_iter().map(|c| cell_step(c, x)).collect();
    parts
        .iter()
        .fold(PiecewiseExpr::zero(), |acc, p| acc.join_disjoint(p))
}

/// `f.X`: the body step on the guard, `beta` on the exit region.
pub fn loop_functional(
    np: &NormalizedProgram,
    beta: &PiecewiseExpr,
    x: &PiecewiseExpr,
) -> PiecewiseExpr {
    wp_step(np, x).join_disjoint(&beta.restrict(&np.exit))
}

/// `f^k(0)`.
pub fn iterate_functional(np: &NormalizedProgram, beta: &PiecewiseExpr, k: usize) -> PiecewiseExpr {
    (0..k).fold(PiecewiseExpr::zero(), |x, _| loop_functional(np, beta, &x))
}
