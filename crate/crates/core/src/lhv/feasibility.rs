use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::extrema::{assignment_from_index, assignment_value};
use super::jd::{dhv_to_jd, DhvModel, JointDistribution};
use super::simplex::{simplex_solve, LpProblem, LpStatus, Relation, Sense};
use super::LhvError;
use crate::dsl::{ScenarioSpec, VariableId};

/// Largest variable count [`jd_feasibility`] will accept.
pub const FEASIBILITY_CAP: usize = 20;
/// Observed values must be matched to this tolerance.
pub const MATCH_TOL: f64 = 1e-9;

/// Measured pair correlators and optional single-variable means.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Observations {
    pub correlators: BTreeMap<(VariableId, VariableId), f64>,
    pub means: BTreeMap<VariableId, f64>,
}

impl Observations {
    /// Stores the pair in sorted order.
    pub fn set_correlator(&mut self, a: VariableId, b: VariableId, value: f64) {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.correlators.insert(key, value);
    }

    pub fn set_mean(&mut self, a: VariableId, value: f64) {
        self.means.insert(a, value);
    }

    /// Sorted distinct variables mentioned.
    pub fn variables(&self) -> Vec<VariableId> {
        let mut v: Vec<VariableId> = self
            .correlators
            .keys()
            .flat_map(|(a, b)| [*a, *b])
            .chain(self.means.keys().copied())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// Observations reproduced by a classical model.
    pub fn from_model(model: &DhvModel, pairs: &[(VariableId, VariableId)]) -> Result<Self, LhvError> {
        let mut out = Self::default();
        for &(a, b) in pairs {
            out.set_correlator(a, b, model.correlator(a, b)?);
        }
        Ok(out)
    }
}

/// A linear functional separating the observations from every classical
/// model: `Σ w⟨ab⟩ + Σ w⟨a⟩ <= classical_max` for all deterministic
/// assignments, while the observed data give `observed > classical_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    pub correlator_weights: Vec<(VariableId, VariableId, f64)>,
    pub mean_weights: Vec<(VariableId, f64)>,
    pub classical_max: f64,
    pub observed: f64,
}

impl InfeasibilityCertificate {
    pub fn violation(&self) -> f64 {
        self.observed - self.classical_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Feasibility {
    Feasible {
        model: DhvModel,
        distribution: JointDistribution,
        /// Largest mismatch between the witness and the observations.
        residual: f64,
    },
    Infeasible { certificate: InfeasibilityCertificate },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
}

/// Decides whether some classical model reproduces `observed`, by an LP over
/// convex weights of all deterministic assignments of the observed variables.
pub fn jd_feasibility(
    scenario: &ScenarioSpec,
    observed: &Observations,
) -> Result<Feasibility, LhvError> {
    let variables = observed.variables();
    for v in &variables {
        if !scenario.contains(*v) {
            return Err(LhvError::UnknownVariable(*v));
        }
    }
    let n = variables.len();
    if n > FEASIBILITY_CAP {
        return Err(LhvError::TooManyVariables { count: n, cap: FEASIBILITY_CAP });
    }
    for (&(a, b), &c) in &observed.correlators {
        if a == b || !(c.abs() <= 1.0 + MATCH_TOL) {
            return Err(LhvError::InvalidObservation(format!("<{a}{b}> = {c}")));
        }
    }
    for (&a, &m) in &observed.means {
        if !(m.abs() <= 1.0 + MATCH_TOL) {
            return Err(LhvError::InvalidObservation(format!("<{a}> = {m}")));
        }
    }
    let pos = |v: &VariableId| variables.binary_search(v).expect("collected");
    let pairs: Vec<((usize, usize), f64)> = observed
        .correlators
        .iter()
        .map(|((a, b), c)| ((pos(a), pos(b)), *c))
        .collect();
    let means: Vec<(usize, f64)> = observed.means.iter().map(|(a, m)| (pos(a), *m)).collect();

    let columns = 1usize << n;
    let mut lp = LpProblem::new(Sense::Minimize, vec![0.0; columns]);
    lp.add(vec![1.0; columns], Relation::Eq, 1.0);
    for &((i, j), c) in &pairs {
        let row = (0..columns as u64)
            .map(|k| f64::from(assignment_value(k, n, i) * assignment_value(k, n, j)))
            .collect();
        lp.add(row, Relation::Eq, c);
    }
    for &(i, m) in &means {
        let row = (0..columns as u64).map(|k| f64::from(assignment_value(k, n, i))).collect();
        lp.add(row, Relation::Eq, m);
    }
    let solution = simplex_solve(&lp)?;
    match solution.status {
        LpStatus::Optimal => {
            let total: f64 = solution.primal.iter().filter(|w| **w > 0.0).sum();
            let support: Vec<_> = solution
                .primal
                .iter()
                .enumerate()
                .filter(|(_, w)| **w > 1e-12)
                .map(|(k, w)| (assignment_from_index(&variables, k as u64), w / total))
                .collect();
            let total: f64 = support.iter().map(|s| s.1).sum();
            let support = support.into_iter().map(|(a, w)| (a, w / total)).collect();
            let model = DhvModel::new(support)?;
            let mut residual: f64 = 0.0;
            for (&(a, b), &c) in &observed.correlators {
                residual = residual.max((model.correlator(a, b)? - c).abs());
            }
            for (&a, &m) in &observed.means {
                residual = residual.max((model.mean(a)? - m).abs());
            }
            let distribution = dhv_to_jd(&model);
            Ok(Feasibility::Feasible { model, distribution, residual })
        }
        LpStatus::Infeasible => {
            let y = solution.farkas.expect("infeasible solutions carry a certificate");
            let correlator_weights: Vec<_> = observed
                .correlators
                .keys()
                .zip(&y[1..])
                .map(|((a, b), w)| (*a, *b, *w))
                .collect();
            let mean_weights: Vec<_> = observed
                .means
                .keys()
                .zip(&y[1 + pairs.len()..])
                .map(|(a, w)| (*a, *w))
                .collect();
            let value = |k: u64| -> f64 {
                pairs
                    .iter()
                    .zip(&y[1..])
                    .map(|(((i, j), _), w)| w * f64::from(assignment_value(k, n, *i) * assignment_value(k, n, *j)))
                    .sum::<f64>()
                    + means
                        .iter()
                        .zip(&y[1 + pairs.len()..])
                        .map(|((i, _), w)| w * f64::from(assignment_value(k, n, *i)))
                        .sum::<f64>()
            };
            let classical_max = (0..columns as u64).map(value).fold(f64::NEG_INFINITY, f64::max);
            let observed_value = pairs.iter().zip(&y[1..]).map(|((_, c), w)| w * c).sum::<f64>()
                + means.iter().zip(&y[1 + pairs.len()..]).map(|((_, m), w)| w * m).sum::<f64>();
            Ok(Feasibility::Infeasible {
                certificate: InfeasibilityCertificate {
                    correlator_weights,
                    mean_weights,
                    classical_max,
                    observed: observed_value,
                },
            })
        }
        LpStatus::Unbounded => unreachable!("a zero objective is never unbounded"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_scenario, var};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn chsh_scenario() -> ScenarioSpec {
        parse_scenario(
            "variables: X1 X2 Y1 Y2\ncontext: X1 Y1\ncontext: X1 Y2\ncontext: X2 Y1\ncontext: X2 Y2\n",
        )
        .unwrap()
    }

    fn chsh(values: [f64; 4]) -> Observations {
        let mut o = Observations::default();
        o.set_correlator(var("X1"), var("Y1"), values[0]);
        o.set_correlator(var("X1"), var("Y2"), values[1]);
        o.set_correlator(var("X2"), var("Y1"), values[2]);
        o.set_correlator(var("X2"), var("Y2"), values[3]);
        o
    }

    #[test]
    fn tsirelson_point_is_infeasible() {
        let h = FRAC_1_SQRT_2;
        let r = jd_feasibility(&chsh_scenario(), &chsh([h, h, h, -h])).unwrap();
        let Feasibility::Infeasible { certificate } = r else { panic!("expected infeasible") };
        assert!(certificate.violation() > 1e-6);
        // The separating functional is a scaled CHSH: its normalized excess is
        // (2√2 − 2)/2.
        let scale = certificate.correlator_weights.iter().map(|w| w.2.abs()).sum::<f64>() / 4.0;
        assert!((certificate.violation() / scale - (2.0 * 2f64.sqrt() - 2.0)).abs() < 1e-9);
    }

    #[test]
    fn deterministic_point_is_feasible() {
        let r = jd_feasibility(&chsh_scenario(), &chsh([1.0, 1.0, 1.0, 1.0])).unwrap();
        let Feasibility::Feasible { model, residual, .. } = r else { panic!() };
        assert!(residual < 1e-9);
        assert_eq!(model.support().len(), 1);
    }

    #[test]
    fn means_constrain_too() {
        let mut o = chsh([1.0, 1.0, 1.0, 1.0]);
        o.set_mean(var("X1"), 0.0);
        assert!(jd_feasibility(&chsh_scenario(), &o).unwrap().is_feasible());
        o.set_correlator(var("X1"), var("X2"), -1.0);
        assert!(!jd_feasibility(&chsh_scenario(), &o).unwrap().is_feasible());
    }

    #[test]
    fn rejects_bad_input() {
        let mut o = chsh([1.0, 1.0, 1.0, 1.5]);
        assert!(matches!(
            jd_feasibility(&chsh_scenario(), &o),
            Err(LhvError::InvalidObservation(_))
        ));
        o = chsh([0.0; 4]);
        o.set_correlator(var("X1"), var("Z1"), 0.0);
        assert!(matches!(
            jd_feasibility(&chsh_scenario(), &o),
            Err(LhvError::UnknownVariable(_))
        ));
    }
}
