//! Classical models: exact extrema over deterministic assignments, joint
//! distributions, feasibility and no-disturbance linear programs.

mod extrema;
mod feasibility;
mod jd;
mod monogamy;
mod nodisturbance;
mod reconstruct;
pub mod simplex;

pub use extrema::{classical_extrema, Extrema, EXTREMA_CAP};
pub use feasibility::{
    jd_feasibility, Feasibility, InfeasibilityCertificate, Observations, FEASIBILITY_CAP,
    MATCH_TOL,
};
pub use jd::{
    correlator_from_jd, dhv_to_jd, mean_from_jd, DeterministicAssignment, DhvModel,
    JointDistribution,
};
pub use monogamy::{monogamy_check, BoundSummary, MonogamyReport, MONOGAMY_SOURCE};
pub use nodisturbance::{nodisturbance_optimum, ContextBehavior, NdOptimum};
pub use reconstruct::{reconstruct_pc, GluedDistribution, TripartiteTables, PROVISO_TOL};
pub use simplex::{
    simplex_solve, Constraint, LpProblem, LpSolution, LpStatus, Relation, Sense, SimplexError,
};

use crate::dsl::{DslError, VariableId};
use crate::poly::DeriveError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LhvError {
    #[error("{count} variables exceed the enumeration cap of {cap}")]
    TooManyVariables { count: usize, cap: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(VariableId),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("term {0} lies in no declared context")]
    TermOutsideContext(String),
    #[error("marginals disagree at x2 = {x2}, y2 = {y2}: {first} vs {second}")]
    ProvisoViolated { x2: i8, y2: i8, first: f64, second: f64 },
    #[error("p(x2 = {x2}, y2 = {y2}) is zero under a non-zero numerator")]
    DivisionByZeroCell { x2: i8, y2: i8 },
    #[error("monogamy parts must both be lower bounds")]
    DirectionMismatch,
    #[error("linear program ended {0:?}")]
    UnexpectedLpStatus(LpStatus),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Derive(DeriveError),
    #[error(transparent)]
    Scenario(DslError),
}
