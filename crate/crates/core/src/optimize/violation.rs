use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::search::{maximize, multistart, SearchConfig, SearchResult};
use super::OptimizeError;
use crate::dsl::{Comparator, VariableId};
use crate::poly::CorrelationInequality;
use crate::quantum::{evaluate_inequality_quantum, BlochVector, DensityMatrix, TermAssignment};

/// How free angles map to measurement directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SettingsParametrization {
    /// One angle per direction, in the x–z plane.
    Coplanar,
    /// Polar and azimuthal angle per direction.
    FullSphere,
}

impl SettingsParametrization {
    pub fn angles_per_vector(self) -> usize {
        match self {
            Self::Coplanar => 1,
            Self::FullSphere => 2,
        }
    }

    pub fn vector(self, p: &[f64]) -> BlochVector {
        match self {
            Self::Coplanar => BlochVector::in_xz_plane(p[0]),
            Self::FullSphere => BlochVector::from_spherical(p[0], p[1]),
        }
    }
}

/// States searched over.
#[derive(Debug, Clone, PartialEq)]
pub enum StateFamily {
    Fixed(DensityMatrix),
    /// `|n⟩|n⟩` with `n` free (same parametrization as the settings).
    EqualProduct,
    /// `|n_A⟩|n_B⟩` with both free.
    Product,
}

impl StateFamily {
    fn vectors(&self) -> usize {
        match self {
            Self::Fixed(_) => 0,
            Self::EqualProduct => 1,
            Self::Product => 2,
        }
    }
}

/// An inequality with its evaluation rules and search space.
#[derive(Debug, Clone)]
pub struct ViolationProblem {
    pub inequality: CorrelationInequality,
    pub assignment: TermAssignment,
    pub family: StateFamily,
    pub parametrization: SettingsParametrization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Left-hand side at the best point.
    pub value: f64,
    pub parameters: Vec<f64>,
    pub settings: BTreeMap<VariableId, BlochVector>,
    /// State directions for product families.
    pub state_directions: Vec<BlochVector>,
    pub evaluations: usize,
    pub grid_value: f64,
    pub converged: bool,
}

impl ViolationProblem {
    pub fn dimension(&self) -> usize {
        (self.inequality.variables().len() + self.family.vectors()) * self.parametrization.angles_per_vector()
    }

    fn sign(&self) -> f64 {
        match self.inequality.direction {
            Comparator::AtMost => 1.0,
            Comparator::AtLeast => -1.0,
        }
    }

    /// Settings and state at a parameter vector.
    pub fn decode(&self, p: &[f64]) -> (BTreeMap<VariableId, BlochVector>, Vec<BlochVector>, DensityMatrix) {
        let k = self.parametrization.angles_per_vector();
        let vars = self.inequality.variables();
        let settings: BTreeMap<VariableId, BlochVector> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, self.parametrization.vector(&p[i * k..(i + 1) * k])))
            .collect();
        let state_dirs: Vec<BlochVector> = (0..self.family.vectors())
            .map(|j| {
                let i = vars.len() + j;
                self.parametrization.vector(&p[i * k..(i + 1) * k])
            })
            .collect();
        let rho = match &self.family {
            StateFamily::Fixed(rho) => rho.clone(),
            StateFamily::EqualProduct => DensityMatrix::product(&state_dirs[0], &state_dirs[0]),
            StateFamily::Product => DensityMatrix::product(&state_dirs[0], &state_dirs[1]),
        };
        (settings, state_dirs, rho)
    }

    /// Left-hand side at a parameter vector.
    pub fn value(&self, p: &[f64]) -> Result<f64, OptimizeError> {
        let (settings, _, rho) = self.decode(p);
        Ok(evaluate_inequality_quantum(&self.inequality, &rho, &settings, &self.assignment)?)
    }

    fn finish(&self, r: SearchResult) -> OptimizationResult {
        let (settings, state_directions, _) = self.decode(&r.parameters);
        OptimizationResult {
            value: self.sign() * r.value,
            parameters: r.parameters,
            settings,
            state_directions,
            evaluations: r.evaluations,
            grid_value: self.sign() * r.grid_value,
            converged: r.converged,
        }
    }

    fn checked(&self) -> Result<impl Fn(&[f64]) -> f64 + Sync + '_, OptimizeError> {
        // Surface evaluation errors once, before the search.
        self.value(&vec![0.0; self.dimension()])?;
        let s = self.sign();
        Ok(move |p: &[f64]| s * self.value(p).unwrap_or(f64::NEG_INFINITY))
    }
}

/// Pushes the left-hand side towards violation (up for `<=`, down for
/// `>=`) over settings and, for product families, states.
pub fn maximize_violation(
    problem: &ViolationProblem,
    config: &SearchConfig,
) -> Result<OptimizationResult, OptimizeError> {
    let f = problem.checked()?;
    match maximize(&f, problem.dimension(), config) {
        Ok(r) => Ok(problem.finish(r)),
        Err(OptimizeError::BudgetExhausted { best }) => Err(OptimizeError::BudgetExhausted {
            best: SearchResult { value: problem.sign() * best.value, ..best },
        }),
        Err(e) => Err(e),
    }
}

/// Independent pattern searches from seeded random starts.
pub fn multistart_violation(
    problem: &ViolationProblem,
    starts: usize,
    seed: u64,
    config: &SearchConfig,
) -> Result<Vec<OptimizationResult>, OptimizeError> {
    let f = problem.checked()?;
    Ok(multistart(&f, problem.dimension(), starts, seed, config)?
        .into_iter()
        .map(|r| problem.finish(r))
        .collect())
}
