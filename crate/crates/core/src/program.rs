//! Probabilistic guarded-command programs and their normal form, in which
//! the guards are replaced by the disjoint atoms of their boolean algebra.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{CoreError, Result};
use crate::guard::{region_partition, Guard, DEFAULT_GUARD_CAP};
use crate::linexpr::{LinExpr, Valuation, Var};
use crate::piecewise::PiecewiseExpr;
use crate::polyhedron::Region;
use crate::rational::Rational;

/// A simultaneous multi-assignment; variables it does not mention keep their value.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Assignment {
    updates: BTreeMap<Var, LinExpr>,
}

impl Assignment {
    pub fn new(updates: impl IntoIterator<Item = (Var, LinExpr)>) -> Self {
        let mut map = BTreeMap::new();
        for (v, e) in updates {
            // `x := x` is no update at all.
            if e != LinExpr::var(v.clone()) {
                map.insert(v, e);
            }
        }
        Assignment { updates: map }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn updates(&self) -> &BTreeMap<Var, LinExpr> {
        &self.updates
    }

    pub fn get(&self, v: &Var) -> Option<&LinExpr> {
        self.updates.get(v)
    }

    pub fn is_identity(&self) -> bool {
        self.updates.is_empty()
    }

    /// The substitution `v ↦ E(v)` for use with `substitute`.
    pub fn as_substitution(&self) -> impl Fn(&Var) -> Option<LinExpr> + '_ {
        move |v| self.updates.get(v).cloned()
    }

    /// The successor of `state`; variables of `state` not updated are copied.
    pub fn apply(&self, state: &BTreeMap<Var, Rational>) -> BTreeMap<Var, Rational> {
        let mut out = state.clone();
        for (v, e) in &self.updates {
            out.insert(v.clone(), e.eval(state));
        }
        out
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .updates
            .iter()
            .map(|(v, e)| format!("{v}' = {e}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// `e ∘ a`: the value of `e` after running `a`.
pub fn affine_compose(e: &LinExpr, a: &Assignment) -> LinExpr {
    e.substitute(a.as_substitution())
}

/// `{s : a(s) ∈ r}`.
pub fn region_preimage(r: &Region, a: &Assignment) -> Region {
    r.substitute(a.as_substitution())
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ProbBranch {
    pub assignment: Assignment,
    pub probability: Rational,
}

impl ProbBranch {
    pub fn new(assignment: Assignment, probability: Rational) -> Self {
        ProbBranch {
            assignment,
            probability,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GuardedCommand {
    pub guard: Guard,
    pub branches: Vec<ProbBranch>,
}

impl GuardedCommand {
    pub fn new(guard: Guard, branches: Vec<ProbBranch>) -> Self {
        GuardedCommand { guard, branches }
    }

    pub fn total_probability(&self) -> Rational {
        self.branches.iter().map(|b| b.probability.clone()).sum()
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Program {
    /// Program variables, in declaration order.
    pub variables: Vec<Var>,
    /// Read-only symbolic constants; state components that no command updates.
    pub consts: Vec<Var>,
    pub init: Option<Assignment>,
    /// States outside this predicate are not analyzed; it must be preserved
    /// by every command.
    pub assume: Guard,
    pub commands: Vec<GuardedCommand>,
    pub post: PiecewiseExpr,
    /// Analysis regions; `None` means the guard atoms.
    pub regions: Option<Vec<Guard>>,
    /// Variables the abstract templates range over; `None` means all program variables.
    pub template: Option<Vec<Var>>,
}

impl Program {
    pub fn new(variables: Vec<Var>, commands: Vec<GuardedCommand>, post: PiecewiseExpr) -> Self {
        Program {
            variables,
            consts: Vec::new(),
            init: None,
            assume: Guard::True,
            commands,
            post,
            regions: None,
            template: None,
        }
    }

    /// Variables followed by constants: the components of a state.
    pub fn state_vars(&self) -> Vec<Var> {
        self.variables.iter().chain(&self.consts).cloned().collect()
    }

    pub fn template_vars(&self) -> Vec<Var> {
        self.template.clone().unwrap_or_else(|| self.variables.clone())
    }

    pub fn guards(&self) -> Vec<Guard> {
        self.commands.iter().map(|c| c.guard.clone()).collect()
    }

    /// Structural checks the parser cannot express in the grammar.
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.commands.iter().enumerate() {
            if c.branches.is_empty() {
                return Err(CoreError::Invalid(format!("command {i} has no branches")));
            }
            for b in &c.branches {
                if b.probability <= Rational::zero() || b.probability > Rational::one() {
                    return Err(CoreError::Invalid(format!(
                        "command {i}: branch probability {} is outside (0, 1]",
                        b.probability
                    )));
                }
                if let Some(v) = b.assignment.updates().keys().find(|v| self.consts.contains(v)) {
                    return Err(CoreError::Invalid(format!(
                        "command {i} assigns to constant {v}"
                    )));
                }
            }
            if c.total_probability() > Rational::one() {
                return Err(CoreError::Invalid(format!(
                    "command {i}: probabilities sum to {}",
                    c.total_probability()
                )));
            }
        }
        Ok(())
    }
}

/// One atom of the guard algebra together with the commands enabled on it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cell {
    pub region: Region,
    /// Indices of the enabled commands.
    pub commands: Vec<usize>,
    /// One branch list per enabled command: the nondeterministic choices.
    pub choices: Vec<Vec<ProbBranch>>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NormalizedProgram {
    pub cells: Vec<Cell>,
    /// States of the analysis domain where no guard holds.
    pub exit: Region,
    /// The analysis domain; cells and exit partition it.
    pub domain: Region,
}

impl NormalizedProgram {
    /// The loop guard: the union of all cells.
    pub fn guard_region(&self) -> Region {
        Region::from_disjoint(
            self.cells
                .iter()
                .flat_map(|c| c.region.disjuncts().iter().cloned())
                .collect(),
        )
    }

    pub fn cell_of(&self, env: &impl Valuation) -> Option<&Cell> {
        self.cells.iter().find(|c| c.region.contains(env))
    }
}

/// The states where no guard holds.
pub fn exit_region(p: &Program) -> Result<Region> {
    Guard::Or(p.guards()).complement_region()
}

pub fn normalize(p: &Program) -> Result<NormalizedProgram> {
    normalize_with_cap(p, DEFAULT_GUARD_CAP)
}

pub fn normalize_with_cap(p: &Program, cap: usize) -> Result<NormalizedProgram> {
    let domain = p.assume.to_region()?;
    let atoms = region_partition(&p.guards(), cap)?;
    let mut cells = Vec::new();
    let mut exit = Region::empty();
    for atom in atoms {
        let region = atom.region.intersect(&domain);
        if region.is_empty() {
            continue;
        }
        if atom.members.is_empty() {
            exit = region;
            continue;
        }
        let choices = atom
            .members
            .iter()
            .map(|&i| p.commands[i].branches.clone())
            .collect();
        cells.push(Cell {
            region,
            commands: atom.members,
            choices,
        });
    }
    if p.assume != Guard::True {
        for cell in &cells {
            for (&cmd, branches) in cell.commands.iter().zip(&cell.choices) {
                for (j, b) in branches.iter().enumerate() {
                    if !region_preimage(&domain, &b.assignment).covers(&cell.region) {
                        return Err(CoreError::AssumeNotInvariant {
                            command: cmd,
                            branch: j,
                        });
                    }
                }
            }
        }
    }
    Ok(NormalizedProgram {
        cells,
        exit,
        domain,
    })
}
