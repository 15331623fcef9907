use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::multilinear::MultilinearPoly;
use crate::dsl::{Comparator, RsExpression, ScenarioSpec, VariableId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeriveError {
    #[error("expansion leaves degree-{degree} monomial {monomial}; the sum of squares did not reduce to pair correlators")]
    ResidualDegree { degree: usize, monomial: String },
    #[error("expansion has no pair correlators")]
    NoCorrelators,
    #[error("variable `{0}` is not in the scenario")]
    UnmappedVariable(VariableId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    CrossParty,
    SameParty,
}

/// `coefficient · ⟨first second⟩`, with `first < second`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationTerm {
    pub first: VariableId,
    pub second: VariableId,
    pub coefficient: i64,
    pub kind: TermKind,
}

impl CorrelationTerm {
    pub fn label(&self) -> String {
        format!("<{}{}>", self.first, self.second)
    }
}

/// A linear inequality on pair correlators: `Σ cᵢ⟨aᵢbᵢ⟩ (<= | >=) bound`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationInequality {
    pub terms: Vec<CorrelationTerm>,
    pub direction: Comparator,
    #[serde(with = "ratio_string")]
    pub bound: Ratio<i64>,
    pub provenance: Option<RsExpression>,
}

impl CorrelationInequality {
    /// Builds an inequality from `(a, b, coefficient)` triples; kinds come
    /// from comparing party letters.
    pub fn from_terms(
        terms: impl IntoIterator<Item = (VariableId, VariableId, i64)>,
        direction: Comparator,
        bound: Ratio<i64>,
    ) -> Self {
        let mut poly = MultilinearPoly::zero();
        for (a, b, c) in terms {
            poly.add_term(vec![a, b], c);
        }
        Self {
            terms: terms_of(&poly),
            direction,
            bound,
            provenance: None,
        }
    }

    /// The left-hand side as a polynomial.
    pub fn lhs(&self) -> MultilinearPoly {
        let mut p = MultilinearPoly::zero();
        for t in &self.terms {
            p.add_term(vec![t.first, t.second], t.coefficient);
        }
        p
    }

    pub fn variables(&self) -> Vec<VariableId> {
        self.lhs().variables()
    }

    /// Left-hand side evaluated with the given pair correlators.
    pub fn evaluate(&self, mut correlator: impl FnMut(VariableId, VariableId) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient as f64 * correlator(t.first, t.second))
            .sum()
    }

    /// Whether `value` (a left-hand side) satisfies the inequality within `tol`.
    pub fn holds(&self, value: f64, tol: f64) -> bool {
        let bound = *self.bound.numer() as f64 / *self.bound.denom() as f64;
        match self.direction {
            Comparator::AtMost => value <= bound + tol,
            Comparator::AtLeast => value >= bound - tol,
        }
    }

    pub fn bound_f64(&self) -> f64 {
        *self.bound.numer() as f64 / *self.bound.denom() as f64
    }

    /// Same inequality multiplied by −1.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coefficient = -t.coefficient;
        }
        out.bound = -out.bound;
        out.direction = out.direction.flipped();
        out
    }
}

impl fmt::Display for CorrelationInequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            let m = t.coefficient.unsigned_abs();
            let sign = match (i, t.coefficient < 0) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            f.write_str(sign)?;
            if m != 1 {
                write!(f, "{m}")?;
            }
            f.write_str(&t.label())?;
        }
        write!(f, " {} {}", self.direction, self.bound)
    }
}

pub(crate) mod ratio_string {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<i64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<i64>, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Parity verdict for one squared group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupVerdict {
    pub index: usize,
    pub term_count: usize,
    /// Whether the sum of the group's coefficients is odd; then the group
    /// takes odd values on every ±1 assignment and its square is at least 1.
    pub odd: bool,
    pub lower_bound: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupReport {
    pub groups: Vec<GroupVerdict>,
    /// Σ per-group lower bounds plus the constant offset.
    pub implied_lhs_bound: i64,
}

pub fn validate_odd_groups(expr: &RsExpression) -> GroupReport {
    let groups: Vec<GroupVerdict> = expr
        .groups()
        .iter()
        .enumerate()
        .map(|(index, g)| {
            let coefficient_sum: i64 = g.terms().iter().map(|(c, _)| *c).sum();
            let odd = coefficient_sum.rem_euclid(2) == 1;
            GroupVerdict {
                index,
                term_count: g.len(),
                odd,
                lower_bound: i64::from(odd),
            }
        })
        .collect();
    let implied_lhs_bound = groups.iter().map(|g| g.lower_bound).sum::<i64>() + expr.constant_offset();
    GroupReport {
        groups,
        implied_lhs_bound,
    }
}

/// `Σ_g (form_g)² + offset`, reduced with `v² = 1`.
pub fn expand(expr: &RsExpression) -> MultilinearPoly {
    let mut total = MultilinearPoly::constant(expr.constant_offset());
    for g in expr.groups() {
        total = &total + &MultilinearPoly::from_linear_form(g).square();
    }
    total
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DeriveWarning {
    /// Group has an even coefficient sum; its square can vanish, so it only
    /// contributes `>= 0` to the bound.
    EvenGroup { index: usize, term_count: usize },
    /// The odd-group argument gives a stronger left-hand bound than the one
    /// written; the stronger one was used.
    BoundTightened { stated: i64, implied: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub inequality: CorrelationInequality,
    pub groups: GroupReport,
    /// Bound on the full left-hand side used for the derivation.
    pub effective_lhs_bound: i64,
    pub warnings: Vec<DeriveWarning>,
}

/// Expands the squares and rewrites `constant + 2·S (cmp) bound` as
/// `S (cmp) (bound − constant)/2` on the pair correlators `S`.
///
/// For `>=` sources the bound is raised to the odd-group bound when that is
/// stronger. The result is normalized so the first term (in variable order)
/// has a positive coefficient, flipping the direction when needed.
pub fn derive_inequality(expr: &RsExpression) -> Result<Derivation, DeriveError> {
    let poly = expand(expr);
    if let Some((k, _)) = poly.iter().find(|(k, _)| !k.is_empty() && k.len() != 2) {
        return Err(DeriveError::ResidualDegree {
            degree: k.len(),
            monomial: k.iter().map(|v| v.to_string()).collect(),
        });
    }
    let pairs = poly.homogeneous_part(2);
    if pairs.is_zero() {
        return Err(DeriveError::NoCorrelators);
    }
    let groups = validate_odd_groups(expr);
    let mut warnings: Vec<DeriveWarning> = groups
        .groups
        .iter()
        .filter(|g| !g.odd)
        .map(|g| DeriveWarning::EvenGroup {
            index: g.index,
            term_count: g.term_count,
        })
        .collect();

    let mut effective = expr.bound();
    if expr.comparator() == Comparator::AtLeast && groups.implied_lhs_bound > effective {
        warnings.push(DeriveWarning::BoundTightened {
            stated: effective,
            implied: groups.implied_lhs_bound,
        });
        effective = groups.implied_lhs_bound;
    }

    // Squares of integer forms give even cross coefficients.
    let constant = poly.constant_term();
    let halved = pairs.iter().map(|(k, c)| (k[0], k[1], c / 2));
    let mut inequality =
        CorrelationInequality::from_terms(halved, expr.comparator(), Ratio::new(effective - constant, 2));
    if inequality.terms[0].coefficient < 0 {
        inequality = inequality.negated();
    }
    inequality.provenance = Some(expr.clone());
    Ok(Derivation {
        inequality,
        groups,
        effective_lhs_bound: effective,
        warnings,
    })
}

fn terms_of(pairs: &MultilinearPoly) -> Vec<CorrelationTerm> {
    pairs
        .iter()
        .map(|(k, c)| CorrelationTerm {
            first: k[0],
            second: k[1],
            coefficient: c,
            kind: if k[0].party() == k[1].party() {
                TermKind::SameParty
            } else {
                TermKind::CrossParty
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Every correlator pairs compatible measurements on different parties.
    Spatial,
    /// Every correlator pairs compatible measurements, some on one party.
    Contextual,
    /// Every correlator pairs incompatible measurements on one party.
    Temporal,
    /// A mix of compatible and sequential correlators.
    Hybrid,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Spatial => "spatial",
            Classification::Contextual => "contextual",
            Classification::Temporal => "temporal",
            Classification::Hybrid => "hybrid",
        })
    }
}

/// Classifies by the scenario's party map and contexts. Measurements on
/// different parties are always compatible; same-party pairs are compatible
/// only inside a declared context and otherwise must be measured in sequence.
pub fn classify(
    ineq: &CorrelationInequality,
    scenario: &ScenarioSpec,
) -> Result<Classification, DeriveError> {
    let (mut compatible_cross, mut compatible_same, mut sequential) = (0, 0, 0);
    for t in &ineq.terms {
        let pa = scenario
            .party_of(t.first)
            .ok_or(DeriveError::UnmappedVariable(t.first))?;
        let pb = scenario
            .party_of(t.second)
            .ok_or(DeriveError::UnmappedVariable(t.second))?;
        if pa != pb {
            compatible_cross += 1;
        } else if scenario.shared_context(t.first, t.second).is_some() {
            compatible_same += 1;
        } else {
            sequential += 1;
        }
    }
    Ok(match (compatible_cross + compatible_same, sequential) {
        (_, 0) if compatible_same == 0 => Classification::Spatial,
        (_, 0) => Classification::Contextual,
        (0, _) => Classification::Temporal,
        _ => Classification::Hybrid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_rs, parse_scenario, var};

    fn brute_force_min(p: &MultilinearPoly) -> i64 {
        let vars = p.variables();
        (0..1u64 << vars.len())
            .map(|bits| {
                p.evaluate(|v| {
                    let i = vars.iter().position(|w| *w == v).unwrap();
                    if bits >> i & 1 == 1 {
                        -1
                    } else {
                        1
                    }
                })
            })
            .min()
            .unwrap()
    }

    #[test]
    fn chsh_expansion_matches_hand_form() {
        let e = parse_rs("(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2").unwrap();
        let p = expand(&e);
        let mut hand = MultilinearPoly::constant(6);
        for (a, b, c) in [("X1", "Y1", -2), ("X1", "Y2", -2), ("X2", "Y1", -2), ("X2", "Y2", 2)] {
            hand.add_term(vec![var(a), var(b)], c);
        }
        assert_eq!(p, hand);
        assert_eq!(brute_force_min(&(&p + &MultilinearPoly::constant(-2))), 0);
    }

    #[test]
    fn hybrid_expansion_matches_hand_form() {
        let e = parse_rs("(X2 - X1 + Y1)^2 + (X1 - Y2 + Y1)^2 >= 2").unwrap();
        let mut hand = MultilinearPoly::constant(6);
        for (a, b, c) in [("X1", "X2", -2), ("X2", "Y1", 2), ("X1", "Y2", -2), ("Y1", "Y2", -2)] {
            hand.add_term(vec![var(a), var(b)], c);
        }
        let p = expand(&e);
        let vars = p.variables();
        for bits in 0..16u32 {
            let value = |v: VariableId| {
                if bits >> vars.iter().position(|w| *w == v).unwrap() & 1 == 1 {
                    -1
                } else {
                    1
                }
            };
            assert_eq!(p.evaluate(value), hand.evaluate(value));
        }
        assert_eq!(p, hand);
    }

    #[test]
    fn chsh_derivation() {
        let d = derive_inequality(&parse_rs("(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2").unwrap())
            .unwrap();
        assert_eq!(
            d.inequality.to_string(),
            "<X1Y1> + <X1Y2> + <X2Y1> - <X2Y2> <= 2"
        );
        assert!(d.warnings.is_empty());
        assert!(d
            .inequality
            .terms
            .iter()
            .all(|t| t.kind == TermKind::CrossParty));
    }

    #[test]
    fn kcbs_derivation() {
        let d = derive_inequality(
            &parse_rs("(X1+X2+X3)^2+(X3+X4+X5)^2+(X1-X3+X5)^2 >= 3").unwrap(),
        )
        .unwrap();
        assert_eq!(
            d.inequality.to_string(),
            "<X1X2> + <X1X5> + <X2X3> + <X3X4> + <X4X5> >= -3"
        );
    }

    #[test]
    fn hybrid_derivation_term_kinds() {
        let d = derive_inequality(&parse_rs("(X2 - X1 + Y1)^2 + (X1 - Y2 + Y1)^2 >= 2").unwrap())
            .unwrap();
        assert_eq!(
            d.inequality.to_string(),
            "<X1X2> + <X1Y2> - <X2Y1> + <Y1Y2> <= 2"
        );
        let kinds: Vec<TermKind> = d.inequality.terms.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            [
                TermKind::SameParty,
                TermKind::CrossParty,
                TermKind::CrossParty,
                TermKind::SameParty
            ]
        );
    }

    #[test]
    fn odd_group_verdicts() {
        let r = validate_odd_groups(&parse_rs("(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2").unwrap());
        assert!(r.groups.iter().all(|g| g.odd && g.term_count == 3));
        assert_eq!(r.implied_lhs_bound, 2);

        let r = validate_odd_groups(&parse_rs("(X1 + Y1)^2 >= 0").unwrap());
        assert_eq!(r.groups[0].term_count, 2);
        assert!(!r.groups[0].odd);
        assert_eq!(r.implied_lhs_bound, 0);
    }

    #[test]
    fn seven_cycle_source_bound_is_tightened() {
        let e = parse_rs(
            "(X1+X2+X3)^2+(X3+X4+X5)^2+(X5+X6+X7)^2+(X1-X3+X5)^2+(X1-X5+X7)^2+5>=0",
        )
        .unwrap();
        let r = validate_odd_groups(&e);
        assert_eq!(r.implied_lhs_bound, 10);
        assert!(brute_force_min(&expand(&e)) >= 10);
        let d = derive_inequality(&e).unwrap();
        assert_eq!(d.effective_lhs_bound, 10);
        assert_eq!(d.inequality.bound, Ratio::from_integer(-5));
        assert!(d
            .warnings
            .contains(&DeriveWarning::BoundTightened { stated: 0, implied: 10 }));
    }

    #[test]
    fn even_group_is_a_warning() {
        let d = derive_inequality(&parse_rs("(X1 + Y1)^2 >= 0").unwrap()).unwrap();
        assert_eq!(d.inequality.to_string(), "<X1Y1> >= -1");
        assert_eq!(
            d.warnings,
            vec![DeriveWarning::EvenGroup { index: 0, term_count: 2 }]
        );
    }

    #[test]
    fn single_variable_square_has_no_correlators() {
        assert_eq!(
            derive_inequality(&parse_rs("(X1)^2 >= 1").unwrap()),
            Err(DeriveError::NoCorrelators)
        );
    }

    #[test]
    fn rederiving_reproduces_expansion() {
        let e = parse_rs("(X2 - X1 + Y1)^2 + (X1 - Y2 + Y1)^2 >= 2").unwrap();
        let d = derive_inequality(&e).unwrap();
        let p = expand(&e);
        let sign = if d.inequality.direction == e.comparator() { 1 } else { -1 };
        let rebuilt = &MultilinearPoly::constant(p.constant_term()) + &d.inequality.lhs().scaled(2 * sign);
        assert_eq!(rebuilt, p);
    }

    #[test]
    fn classification() {
        let chsh = derive_inequality(&parse_rs("(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2").unwrap())
            .unwrap()
            .inequality;
        let bell = parse_scenario("variables: X1 X2 Y1 Y2\n").unwrap();
        assert_eq!(classify(&chsh, &bell).unwrap(), Classification::Spatial);

        let lg = derive_inequality(&parse_rs("(L-K-M)^2 + (J -K + M)^2 >= 2").unwrap())
            .unwrap()
            .inequality;
        let one_particle = parse_scenario("variables: J K L M\nparty P: J K L M\n").unwrap();
        assert_eq!(classify(&lg, &one_particle).unwrap(), Classification::Temporal);

        let hybrid = derive_inequality(&parse_rs("(X2 - X1 + Y1)^2 + (X1 - Y2 + Y1)^2 >= 2").unwrap())
            .unwrap()
            .inequality;
        let spacetime = parse_scenario(
            "variables: X1 X2 Y1 Y2\nsequential: X1 X2\nsequential: Y1 Y2\n",
        )
        .unwrap();
        assert_eq!(classify(&hybrid, &spacetime).unwrap(), Classification::Hybrid);

        let kcbs = derive_inequality(
            &parse_rs("(X1+X2+X3)^2+(X3+X4+X5)^2+(X1-X3+X5)^2 >= 3").unwrap(),
        )
        .unwrap()
        .inequality;
        let pentagon = parse_scenario(
            "variables: X1 X2 X3 X4 X5\ncontext: X1 X2\ncontext: X2 X3\ncontext: X3 X4\ncontext: X4 X5\ncontext: X5 X1\n",
        )
        .unwrap();
        assert_eq!(classify(&kcbs, &pentagon).unwrap(), Classification::Contextual);

        assert_eq!(
            classify(&chsh, &parse_scenario("variables: X1 X2 Y1\n").unwrap()),
            Err(DeriveError::UnmappedVariable(var("Y2")))
        );
    }
}
