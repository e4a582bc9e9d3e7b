//! Lower bounds (and, when certified, exact values) for weakest
//! pre-expectations of probabilistic guarded-command programs.
//!
//! Expectations are represented as piecewise-linear functions over polyhedral
//! regions of the integer state space. The analysis iterates an abstract loop
//! transformer whose steps are synthesized by linear programming, checks every
//! step with exact Farkas certificates, and can be cross-validated against an
//! explicit-state value iteration.

pub mod corpus;
pub mod error;
pub mod farkas;
pub mod fixpoint;
pub mod guard;
pub mod linexpr;
pub mod lp;
pub mod oracle;
pub mod piecewise;
pub mod polyhedron;
pub mod program;
pub mod rational;
pub mod rva;
pub mod wp;

pub use error::{CoreError, Result};
pub use farkas::{farkas_certificate, farkas_dominates, FarkasCertificate};
pub use guard::{region_partition, Atom, CmpOp, Guard};
pub use linexpr::{LinConstraint, LinExpr, Relation, Valuation, Var};
pub use piecewise::{pw_dominates, pw_evaluate, MinExpr, Piece, PiecewiseExpr};
pub use polyhedron::{Polyhedron, Region};
pub use program::{
    affine_compose, exit_region, normalize, region_preimage, Assignment, Cell, GuardedCommand,
    NormalizedProgram, ProbBranch, Program,
};
pub use rational::Rational;
pub use wp::{iterate_functional, loop_functional, wp_step};
pub use rva::{
    abstract_leq, abstract_step, abstract_step_with, beta_abs, concretize, lower_bound_plane,
    AbstractDomain, AbstractElement, Schedule,
};
pub use fixpoint::{
    apply_init, check_correctness, exactness_check, init_value, kleene_iterate, InitValue,
    IterationTrace, KleeneOptions, Status,
};
pub use oracle::{build_generators, closure_invariance_check, value_iteration, value_iteration_limited, GeneratorSet, State, StateBox};
