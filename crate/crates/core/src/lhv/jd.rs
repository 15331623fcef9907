use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LhvError;
use crate::dsl::VariableId;

const NORMALIZATION_TOL: f64 = 1e-12;

/// A complete ±1 valuation of a set of variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeterministicAssignment {
    values: BTreeMap<VariableId, i8>,
}

impl DeterministicAssignment {
    /// Panics if a value is not ±1.
    pub fn new(values: impl IntoIterator<Item = (VariableId, i8)>) -> Self {
        let values: BTreeMap<_, _> = values.into_iter().collect();
        assert!(values.values().all(|v| *v == 1 || *v == -1), "values must be ±1");
        Self { values }
    }

    pub fn values(&self) -> &BTreeMap<VariableId, i8> {
        &self.values
    }

    pub fn get(&self, v: VariableId) -> Option<i8> {
        self.values.get(&v).copied()
    }

    pub fn variables(&self) -> Vec<VariableId> {
        self.values.keys().copied().collect()
    }
}

/// A probability distribution over deterministic assignments of one
/// variable set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DhvModel {
    support: Vec<(DeterministicAssignment, f64)>,
}

impl DhvModel {
    pub fn new(support: Vec<(DeterministicAssignment, f64)>) -> Result<Self, LhvError> {
        let Some((first, _)) = support.first() else {
            return Err(LhvError::InvalidModel("empty support".into()));
        };
        let vars = first.variables();
        if support.iter().any(|(a, _)| a.variables() != vars) {
            return Err(LhvError::InvalidModel(
                "assignments cover different variables".into(),
            ));
        }
        if support.iter().any(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(LhvError::InvalidModel("negative or non-finite weight".into()));
        }
        let total: f64 = support.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(LhvError::InvalidModel(format!("weights sum to {total}")));
        }
        Ok(Self { support })
    }

    pub fn support(&self) -> &[(DeterministicAssignment, f64)] {
        &self.support
    }

    pub fn variables(&self) -> Vec<VariableId> {
        self.support[0].0.variables()
    }

    /// `Σ_λ ρ(λ) a(λ) b(λ)`.
    pub fn correlator(&self, a: VariableId, b: VariableId) -> Result<f64, LhvError> {
        let mut sum = 0.0;
        for (assignment, w) in &self.support {
            let x = assignment.get(a).ok_or(LhvError::UnknownVariable(a))?;
            let y = assignment.get(b).ok_or(LhvError::UnknownVariable(b))?;
            sum += w * f64::from(x * y);
        }
        Ok(sum)
    }

    pub fn mean(&self, a: VariableId) -> Result<f64, LhvError> {
        let mut sum = 0.0;
        for (assignment, w) in &self.support {
            sum += w * f64::from(assignment.get(a).ok_or(LhvError::UnknownVariable(a))?);
        }
        Ok(sum)
    }
}

/// Probability table over full outcome tuples, ordered as `variables`.
/// Absent tuples have probability zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    variables: Vec<VariableId>,
    #[serde(with = "outcome_rows")]
    table: BTreeMap<Vec<i8>, f64>,
}

/// Tables as `[[outcomes, p], ...]`, since JSON keys must be strings.
mod outcome_rows {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(t: &BTreeMap<Vec<i8>, f64>, s: S) -> Result<S::Ok, S::Error> {
        t.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Vec<i8>, f64>, D::Error> {
        Ok(Vec::<(Vec<i8>, f64)>::deserialize(d)?.into_iter().collect())
    }
}

impl JointDistribution {
    pub fn new(variables: Vec<VariableId>, table: BTreeMap<Vec<i8>, f64>) -> Result<Self, LhvError> {
        if variables.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LhvError::InvalidModel("variables must be sorted and distinct".into()));
        }
        for (outcome, p) in &table {
            if outcome.len() != variables.len() || outcome.iter().any(|v| *v != 1 && *v != -1) {
                return Err(LhvError::InvalidModel("malformed outcome tuple".into()));
            }
            if !(*p >= 0.0) {
                return Err(LhvError::InvalidModel("negative probability".into()));
            }
        }
        let total: f64 = table.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(LhvError::InvalidModel(format!("probabilities sum to {total}")));
        }
        Ok(Self { variables, table })
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn table(&self) -> &BTreeMap<Vec<i8>, f64> {
        &self.table
    }

    pub fn probability(&self, outcome: &[i8]) -> f64 {
        self.table.get(outcome).copied().unwrap_or(0.0)
    }

    fn position(&self, v: VariableId) -> Result<usize, LhvError> {
        self.variables
            .binary_search(&v)
            .map_err(|_| LhvError::UnknownVariable(v))
    }

    /// Marginal table over `subset` (in the given order).
    pub fn marginal(&self, subset: &[VariableId]) -> Result<BTreeMap<Vec<i8>, f64>, LhvError> {
        let idx: Vec<usize> = subset.iter().map(|v| self.position(*v)).collect::<Result<_, _>>()?;
        let mut out = BTreeMap::new();
        for (outcome, p) in &self.table {
            let key: Vec<i8> = idx.iter().map(|&i| outcome[i]).collect();
            *out.entry(key).or_insert(0.0) += p;
        }
        Ok(out)
    }
}

/// Collects a model's weights onto outcome tuples.
pub fn dhv_to_jd(model: &DhvModel) -> JointDistribution {
    let variables = model.variables();
    let mut table = BTreeMap::new();
    for (assignment, w) in model.support() {
        let key: Vec<i8> = assignment.values().values().copied().collect();
        *table.entry(key).or_insert(0.0) += w;
    }
    JointDistribution { variables, table }
}

/// `Σ_outcomes a·b·P(outcome)`.
pub fn correlator_from_jd(
    jd: &JointDistribution,
    a: VariableId,
    b: VariableId,
) -> Result<f64, LhvError> {
    let i = jd.position(a)?;
    let j = jd.position(b)?;
    Ok(jd
        .table
        .iter()
        .map(|(o, p)| f64::from(o[i] * o[j]) * p)
        .sum())
}

/// `Σ_outcomes a·P(outcome)`.
pub fn mean_from_jd(jd: &JointDistribution, a: VariableId) -> Result<f64, LhvError> {
    let i = jd.position(a)?;
    Ok(jd.table.iter().map(|(o, p)| f64::from(o[i]) * p).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::var;
    use crate::lhv::extrema::assignment_from_index;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point(values: &[(&str, i8)]) -> DeterministicAssignment {
        DeterministicAssignment::new(values.iter().map(|(n, v)| (var(n), *v)))
    }

    #[test]
    fn point_model_is_delta() {
        let m = DhvModel::new(vec![(point(&[("X1", 1), ("Y1", 1)]), 1.0)]).unwrap();
        let jd = dhv_to_jd(&m);
        assert_eq!(jd.probability(&[1, 1]), 1.0);
        assert_eq!(jd.table().len(), 1);
        assert_eq!(correlator_from_jd(&jd, var("X1"), var("Y1")).unwrap(), 1.0);
    }

    #[test]
    fn uniform_model_is_uniform() {
        let vars = [var("X1"), var("Y1")];
        let support = (0..4).map(|k| (assignment_from_index(&vars, k), 0.25)).collect();
        let jd = dhv_to_jd(&DhvModel::new(support).unwrap());
        assert_eq!(jd.table().len(), 4);
        assert!(jd.table().values().all(|p| *p == 0.25));
        assert_eq!(correlator_from_jd(&jd, var("X1"), var("Y1")).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(DhvModel::new(vec![]).is_err());
        assert!(DhvModel::new(vec![(point(&[("X1", 1)]), 0.5)]).is_err());
        assert!(DhvModel::new(vec![(point(&[("X1", 1)]), 1.5), (point(&[("X1", -1)]), -0.5)]).is_err());
        assert!(DhvModel::new(vec![(point(&[("X1", 1)]), 0.5), (point(&[("X2", 1)]), 0.5)]).is_err());
    }

    #[test]
    fn unknown_variable() {
        let m = DhvModel::new(vec![(point(&[("X1", 1)]), 1.0)]).unwrap();
        assert!(matches!(
            correlator_from_jd(&dhv_to_jd(&m), var("X1"), var("Y9")),
            Err(LhvError::UnknownVariable(_))
        ));
    }

    #[test]
    fn random_models_agree_both_ways() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vars = [var("X1"), var("X2"), var("Y1"), var("Y2")];
        for _ in 0..50 {
            let mut raw: Vec<(DeterministicAssignment, f64)> = (0..6)
                .map(|_| (assignment_from_index(&vars, rng.random_range(0..16)), rng.random::<f64>()))
                .collect();
            let total: f64 = raw.iter().map(|r| r.1).sum();
            raw.iter_mut().for_each(|r| r.1 /= total);
            let Ok(model) = DhvModel::new(raw) else { continue };
            let jd = dhv_to_jd(&model);
            for a in vars {
                for b in vars {
                    let direct = model.correlator(a, b).unwrap();
                    let via = correlator_from_jd(&jd, a, b).unwrap();
                    assert!((direct - via).abs() < 1e-12);
                }
                assert!((model.mean(a).unwrap() - mean_from_jd(&jd, a).unwrap()).abs() < 1e-12);
            }
        }
    }
}
