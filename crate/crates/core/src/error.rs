use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("polyhedron is empty")]
    EmptyPolyhedron,
    #[error("too many guards: {count} exceeds the cap of {cap}")]
    TooManyGuards { count: usize, cap: usize },
    #[error("disjunctive normal form of a guard exceeds {cap} disjuncts")]
    DnfTooLarge { cap: usize },
    #[error("non-affine assignment: {0}")]
    NonAffineAssignment(String),
    #[error("abstract elements are defined over different regions")]
    RegionMismatch,
    #[error("no plane fits between the previous iterate and the transformer output on region {region}: {detail}")]
    InfeasibleSandwich { region: usize, detail: String },
    #[error("post-expectation is not linear on region {region}: {detail}")]
    PostNotLinear { region: usize, detail: String },
    #[error("assumed domain is not preserved by command {command}, branch {branch}")]
    AssumeNotInvariant { command: usize, branch: usize },
    #[error("reachable state {state} leaves the state box")]
    StateBoxEscape { state: String },
    #[error("state {state} is not integer-valued")]
    NonIntegerState { state: String },
    #[error("explicit exploration exceeded {limit} states")]
    StateLimit { limit: usize },
    #[error("linear program is unbounded: {0}")]
    UnboundedProgram(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
