use std::collections::BTreeSet;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::extrema::classical_extrema;
use super::nodisturbance::nodisturbance_optimum;
use super::simplex::Sense;
use super::LhvError;
use crate::dsl::{Comparator, RsExpression, ScenarioSpec};
use crate::poly::{derive_inequality, CorrelationInequality};

/// CHSH-type source on `X1, X3, Y1, Y2` followed by the pentagon source.
pub const MONOGAMY_SOURCE: &str = "{(X3 + Y1 + Y2)^2 + (X1 + Y1 - Y2)^2} + \
{(X1 + X2 + X3)^2 + (X3 + X4 + X5)^2 + (X1 - X3 + X5)^2} >= 5";

/// Lower bounds on one objective, computed three ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    #[serde(with = "crate::poly::ratio_string")]
    pub symbolic: Ratio<i64>,
    pub classical_min: i64,
    pub nodisturbance_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonogamyReport {
    pub combined: BoundSummary,
    /// Combined minimum once marginal consistency is dropped.
    pub relaxed_min: f64,
    /// The contextuality part alone, with the other parties removed.
    pub kcbs_alone: BoundSummary,
    /// Symbolic, classical and no-disturbance minima coincide within `1e-7`.
    pub agreement: bool,
}

fn lower_bound(ineq: &CorrelationInequality) -> Result<Ratio<i64>, LhvError> {
    match ineq.direction {
        Comparator::AtLeast => Ok(ineq.bound),
        Comparator::AtMost => Err(LhvError::DirectionMismatch),
    }
}

/// Checks that `chsh + kcbs` cannot drop below the sum of their bounds on
/// the no-disturbance polytope of `scenario`. When both inequalities carry
/// their sum-of-squares sources, the symbolic bound is re-derived from the
/// concatenated source.
pub fn monogamy_check(
    scenario: &ScenarioSpec,
    chsh: &CorrelationInequality,
    kcbs: &CorrelationInequality,
) -> Result<MonogamyReport, LhvError> {
    let objective = &chsh.lhs() + &kcbs.lhs();
    let mut symbolic = lower_bound(chsh)? + lower_bound(kcbs)?;
    if let (Some(a), Some(b)) = (&chsh.provenance, &kcbs.provenance) {
        let groups = a.groups().iter().chain(b.groups()).cloned().collect();
        let joined = RsExpression::new(
            groups,
            a.constant_offset() + b.constant_offset(),
            Comparator::AtLeast,
            a.bound() + b.bound(),
        )
        .expect("non-empty");
        let derived = derive_inequality(&joined).map_err(LhvError::Derive)?;
        if derived.inequality.lhs() == objective && derived.inequality.direction == Comparator::AtLeast {
            symbolic = derived.inequality.bound;
        }
    }
    let combined = BoundSummary {
        symbolic,
        classical_min: classical_extrema(&objective)?.min,
        nodisturbance_min: nodisturbance_optimum(scenario, &objective, Sense::Minimize, false)?.value,
    };
    let relaxed_min = nodisturbance_optimum(scenario, &objective, Sense::Minimize, true)?.value;

    let keep: BTreeSet<&str> = kcbs
        .variables()
        .iter()
        .filter_map(|v| scenario.party_of(*v))
        .collect();
    let mut reduced = scenario.clone();
    for party in scenario.parties() {
        if !keep.contains(party) {
            reduced = reduced.without_party(party).map_err(LhvError::Scenario)?;
        }
    }
    let kcbs_poly = kcbs.lhs();
    let kcbs_alone = BoundSummary {
        symbolic: lower_bound(kcbs)?,
        classical_min: classical_extrema(&kcbs_poly)?.min,
        nodisturbance_min: nodisturbance_optimum(&reduced, &kcbs_poly, Sense::Minimize, false)?.value,
    };
    let s = *combined.symbolic.numer() as f64 / *combined.symbolic.denom() as f64;
    let agreement = (combined.nodisturbance_min - s).abs() < 1e-7
        && (combined.classical_min as f64 - s).abs() < 1e-7;
    Ok(MonogamyReport {
        combined,
        relaxed_min,
        kcbs_alone,
        agreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_rs, parse_scenario};

    fn fixture() -> ScenarioSpec {
        parse_scenario(include_str!("../../fixtures/monogamy.scn")).unwrap()
    }

    fn derive(src: &str) -> CorrelationInequality {
        derive_inequality(&parse_rs(src).unwrap()).unwrap().inequality
    }

    #[test]
    fn combined_source_gives_minus_five() {
        let d = derive(MONOGAMY_SOURCE);
        assert_eq!(d.direction, Comparator::AtLeast);
        assert_eq!(d.bound, Ratio::from_integer(-5));
        assert_eq!(d.terms.len(), 9);
    }

    #[test]
    fn monogamy_holds_on_nodisturbance_polytope() {
        let chsh = derive("(X3 + Y1 + Y2)^2 + (X1 + Y1 - Y2)^2 >= 2");
        let kcbs = derive("(X1 + X2 + X3)^2 + (X3 + X4 + X5)^2 + (X1 - X3 + X5)^2 >= 3");
        let r = monogamy_check(&fixture(), &chsh, &kcbs).unwrap();
        assert_eq!(r.combined.symbolic, Ratio::from_integer(-5));
        assert_eq!(r.combined.classical_min, -5);
        assert!((r.combined.nodisturbance_min + 5.0).abs() < 1e-7, "{}", r.combined.nodisturbance_min);
        assert!(r.agreement);
        assert!(r.relaxed_min < -5.0 - 1e-6);
        assert_eq!(r.kcbs_alone.symbolic, Ratio::from_integer(-3));
        assert_eq!(r.kcbs_alone.classical_min, -3);
        // Perfect anticorrelation on every edge is consistent with uniform
        // marginals, so the pentagon alone reaches −5.
        assert!((r.kcbs_alone.nodisturbance_min + 5.0).abs() < 1e-7);
    }

    #[test]
    fn alternating_witness() {
        let obj = derive(MONOGAMY_SOURCE).lhs();
        let x = [1i8, -1, 1, -1, 1];
        let value = obj.evaluate(|v| match v.party() {
            'X' => x[v.index().unwrap() as usize - 1],
            _ => -1,
        });
        assert_eq!(value, -5);
    }

    #[test]
    fn upper_bounds_are_rejected() {
        let chsh = derive("(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2");
        let kcbs = derive("(X1 + X2 + X3)^2 + (X3 + X4 + X5)^2 + (X1 - X3 + X5)^2 >= 3");
        assert!(matches!(
            monogamy_check(&fixture(), &chsh, &kcbs),
            Err(LhvError::DirectionMismatch)
        ));
    }
}
