use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::correlator::{sequential_correlator, spatial_correlator};
use super::state::{BlochVector, DensityMatrix, Subsystem};
use super::QuantumError;
use crate::dsl::VariableId;
use crate::poly::CorrelationInequality;

/// How one correlator `⟨ab⟩` is realized on a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum TermRule {
    /// `a` measured on one qubit and `b` on the other, simultaneously.
    Tensor { a: Subsystem, b: Subsystem },
    /// Both measured on `subsystem`, `first` before `second`.
    Sequential {
        subsystem: Subsystem,
        first: VariableId,
        second: VariableId,
    },
}

/// One rule per term of an inequality, keyed by the sorted variable pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermAssignment {
    rules: BTreeMap<(VariableId, VariableId), TermRule>,
}

fn key(a: VariableId, b: VariableId) -> (VariableId, VariableId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TermAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: VariableId, b: VariableId, rule: TermRule) {
        self.rules.insert(key(a, b), rule);
    }

    pub fn get(&self, a: VariableId, b: VariableId) -> Option<&TermRule> {
        self.rules.get(&key(a, b))
    }

    pub fn rules(&self) -> &BTreeMap<(VariableId, VariableId), TermRule> {
        &self.rules
    }

    /// Places each party letter on a qubit: cross-party terms become tensor
    /// products, same-party terms sequential measurements in written order
    /// (the sorted order, e.g. `X1` before `X2`).
    pub fn by_party(
        ineq: &CorrelationInequality,
        placement: &[(char, Subsystem)],
    ) -> Result<Self, QuantumError> {
        let place = |v: VariableId| {
            placement
                .iter()
                .find(|(p, _)| *p == v.party())
                .map(|(_, s)| *s)
                .ok_or_else(|| QuantumError::MissingAssignment(format!("party of {v}")))
        };
        let mut out = Self::new();
        for t in &ineq.terms {
            let (sa, sb) = (place(t.first)?, place(t.second)?);
            let rule = if t.first.party() == t.second.party() {
                TermRule::Sequential { subsystem: sa, first: t.first, second: t.second }
            } else {
                TermRule::Tensor { a: sa, b: sb }
            };
            out.insert(t.first, t.second, rule);
        }
        Ok(out)
    }
}

fn setting(settings: &BTreeMap<VariableId, BlochVector>, v: VariableId) -> Result<&BlochVector, QuantumError> {
    settings.get(&v).ok_or(QuantumError::MissingSetting(v))
}

/// Value of one correlator under its rule.
pub fn term_value(
    rho: &DensityMatrix,
    settings: &BTreeMap<VariableId, BlochVector>,
    a: VariableId,
    b: VariableId,
    rule: &TermRule,
) -> Result<f64, QuantumError> {
    match *rule {
        TermRule::Tensor { a: sa, b: sb } => {
            if sa == sb {
                return Err(QuantumError::MissingAssignment(format!(
                    "<{a}{b}>: tensor rule needs two different qubits"
                )));
            }
            let (va, vb) = (setting(settings, a)?, setting(settings, b)?);
            match sa {
                Subsystem::A => spatial_correlator(rho, va, vb),
                Subsystem::B => spatial_correlator(rho, vb, va),
            }
        }
        TermRule::Sequential { subsystem, first, second } => {
            if key(first, second) != key(a, b) {
                return Err(QuantumError::MissingAssignment(format!(
                    "<{a}{b}>: sequential rule names {first}, {second}"
                )));
            }
            sequential_correlator(rho, subsystem, setting(settings, first)?, setting(settings, second)?)
        }
    }
}

/// `Σ cᵢ ⟨aᵢbᵢ⟩` with each correlator realized by its rule.
pub fn evaluate_inequality_quantum(
    ineq: &CorrelationInequality,
    rho: &DensityMatrix,
    settings: &BTreeMap<VariableId, BlochVector>,
    assignment: &TermAssignment,
) -> Result<f64, QuantumError> {
    let mut total = 0.0;
    for t in &ineq.terms {
        let rule = assignment
            .get(t.first, t.second)
            .ok_or_else(|| QuantumError::MissingAssignment(t.label()))?;
        total += t.coefficient as f64 * term_value(rho, settings, t.first, t.second, rule)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_rs, var};
    use crate::poly::derive_inequality;
    use std::f64::consts::FRAC_PI_4;

    fn chsh() -> CorrelationInequality {
        derive_inequality(&parse_rs("(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2").unwrap())
            .unwrap()
            .inequality
    }

    fn ladder() -> BTreeMap<VariableId, BlochVector> {
        [("X1", 0.0), ("X2", 2.0), ("Y1", 1.0), ("Y2", -1.0)]
            .into_iter()
            .map(|(n, k)| (var(n), BlochVector::in_xz_plane(k * FRAC_PI_4)))
            .collect()
    }

    #[test]
    fn chsh_on_mixed_state_vanishes() {
        let c = chsh();
        let a = TermAssignment::by_party(&c, &[('X', Subsystem::A), ('Y', Subsystem::B)]).unwrap();
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        assert!(evaluate_inequality_quantum(&c, &rho, &ladder(), &a).unwrap().abs() < 1e-15);
    }

    #[test]
    fn chsh_singlet_reaches_tsirelson_with_reflected_bob() {
        let c = chsh();
        let a = TermAssignment::by_party(&c, &[('X', Subsystem::A), ('Y', Subsystem::B)]).unwrap();
        let mut s = ladder();
        // Literal trace gives −a·b; a reflected Bob turns that into +a·b.
        for v in ["Y1", "Y2"] {
            let n = s[&var(v)].negated();
            s.insert(var(v), n);
        }
        let v = evaluate_inequality_quantum(&c, &DensityMatrix::singlet(), &s, &a).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn missing_pieces() {
        let c = chsh();
        let a = TermAssignment::by_party(&c, &[('X', Subsystem::A), ('Y', Subsystem::B)]).unwrap();
        let mut s = ladder();
        s.remove(&var("Y2"));
        assert!(matches!(
            evaluate_inequality_quantum(&c, &DensityMatrix::singlet(), &s, &a),
            Err(QuantumError::MissingSetting(_))
        ));
        assert!(matches!(
            evaluate_inequality_quantum(&c, &DensityMatrix::singlet(), &ladder(), &TermAssignment::new()),
            Err(QuantumError::MissingAssignment(_))
        ));
        assert!(matches!(
            TermAssignment::by_party(&c, &[('X', Subsystem::A)]),
            Err(QuantumError::MissingAssignment(_))
        ));
    }
}
