//! Random small programs for property tests and cross-validation: at most
//! two commands over at most two variables, branch probabilities drawn from
//! {1/4, 1/2, 1}, affine updates with small integer coefficients.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::guard::{CmpOp, Guard};
use crate::linexpr::{LinExpr, Var};
use crate::piecewise::PiecewiseExpr;
use crate::program::{normalize, Assignment, GuardedCommand, ProbBranch, Program};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug)]
pub struct CorpusConfig {
    pub max_commands: usize,
    pub max_vars: usize,
    /// Update coefficients lie in `[-coef_range, coef_range]`.
    pub coef_range: i64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            max_commands: 2,
            max_vars: 2,
            coef_range: 2,
        }
    }
}

const NAMES: [&str; 3] = ["x", "y", "z"];
const OPS: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt];

fn random_expr(rng: &mut impl Rng, vars: &[Var], range: i64, constant: i64) -> LinExpr {
    let mut e = LinExpr::int(rng.gen_range(-constant..=constant));
    for v in vars {
        e.add_term(v.clone(), rational::int(rng.gen_range(-range..=range)));
    }
    e
}

fn random_atom(rng: &mut impl Rng, vars: &[Var]) -> Guard {
    let lhs = random_expr(rng, vars, 2, 0);
    let rhs = LinExpr::int(rng.gen_range(-3..=3));
    Guard::cmp(lhs, *OPS.choose(rng).expect("nonempty"), rhs)
}

fn random_guard(rng: &mut impl Rng, vars: &[Var]) -> Guard {
    if rng.gen_bool(0.5) {
        random_atom(rng, vars)
    } else {
        Guard::and(vec![random_atom(rng, vars), random_atom(rng, vars)])
    }
}

fn random_branches(rng: &mut impl Rng, vars: &[Var], range: i64) -> Vec<ProbBranch> {
    let quarter = rational::ratio(1, 4);
    let probs = [rational::ratio(1, 4), rational::ratio(1, 2), rational::one()];
    let mut left = rational::one();
    let mut out = Vec::new();
    let count = rng.gen_range(1..=2);
    for _ in 0..count {
        let allowed: Vec<&Rational> = probs.iter().filter(|p| **p <= left).collect();
        if allowed.is_empty() || left < quarter {
            break;
        }
        let p = (*allowed.choose(rng).expect("nonempty")).clone();
        left -= &p;
        let mut updates = Vec::new();
        for v in vars {
            if rng.gen_bool(0.7) {
                updates.push((v.clone(), random_expr(rng, vars, range, 2)));
            }
        }
        out.push(ProbBranch::new(Assignment::new(updates), p));
    }
    out
}

/// A random program whose post-expectation is nonnegative on its domain.
pub fn random_program(rng: &mut impl Rng, cfg: &CorpusConfig) -> Program {
    loop {
        let n = rng.gen_range(1..=cfg.max_vars.clamp(1, NAMES.len()));
        let vars: Vec<Var> = NAMES[..n].iter().map(|s| Var::new(s)).collect();
        let commands = (0..rng.gen_range(1..=cfg.max_commands.max(1)))
            .map(|_| {
                GuardedCommand::new(
                    random_guard(rng, &vars),
                    random_branches(rng, &vars, cfg.coef_range),
                )
            })
            .collect();
        let mut p = Program::new(vars.clone(), commands, PiecewiseExpr::zero());
        if rng.gen_bool(0.5) {
            p.post = PiecewiseExpr::linear(LinExpr::int(rng.gen_range(1..=3)));
        } else {
            // A variable kept nonnegative by an assumed invariant.
            let v = vars.choose(rng).expect("nonempty").clone();
            p.post = PiecewiseExpr::linear(LinExpr::var(v.clone()));
            p.assume = Guard::cmp(LinExpr::var(v), CmpOp::Ge, LinExpr::zero());
        }
        if p.validate().is_ok() && normalize(&p).is_ok() {
            return p;
        }
    }
}
