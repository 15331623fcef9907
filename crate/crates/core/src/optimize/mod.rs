//! Numerical search for quantum violations: a coarse angle grid refined by
//! compass pattern search, and the grid scan of the Tsirelson envelope.

mod envelope;
mod search;
mod violation;

pub use envelope::{grid_angle, scan_envelope, EnvelopeScan};
pub use search::{grid_points_for, maximize, multistart, pattern_search, SearchConfig, SearchResult};
pub use violation::{
    maximize_violation, multistart_violation, OptimizationResult, SettingsParametrization,
    StateFamily, ViolationProblem,
};

use crate::quantum::QuantumError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizeError {
    #[error("evaluation budget exhausted after {} evaluations (best {})", best.evaluations, best.value)]
    BudgetExhausted { best: SearchResult },
    #[error("objective is not finite anywhere on the grid")]
    NonFiniteObjective,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}
