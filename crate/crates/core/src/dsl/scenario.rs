//! Measurement scenarios: which variables exist, who measures them, which
//! subsets are jointly measurable and which pairs are measured in time order.
//!
//! Text format, one declaration per line, `#` comments:
//!
//! ```text
//! variables: X1 X2 Y1 Y2
//! party A: X1 X2
//! party B: Y1 Y2
//! context: X1 Y1
//! sequential: X1 X2
//! ```
//!
//! A variable with no `party` line belongs to the party named by its letter.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::variable::VariableId;
use super::DslError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    variables: Vec<VariableId>,
    contexts: Vec<Vec<VariableId>>,
    sequential_pairs: Vec<(VariableId, VariableId)>,
    party_map: BTreeMap<VariableId, String>,
}

impl ScenarioSpec {
    /// Validates and builds a scenario. Contexts are stored sorted.
    pub fn new(
        variables: Vec<VariableId>,
        contexts: Vec<Vec<VariableId>>,
        sequential_pairs: Vec<(VariableId, VariableId)>,
        parties: BTreeMap<VariableId, String>,
    ) -> Result<Self, DslError> {
        let mut declared = variables.clone();
        declared.sort();
        declared.dedup();
        if declared.len() != variables.len() {
            return Err(DslError::DuplicateDeclaration);
        }
        let check = |v: &VariableId| {
            if declared.binary_search(v).is_ok() {
                Ok(())
            } else {
                Err(DslError::UndeclaredVariable {
                    variable: *v,
                    line: None,
                })
            }
        };
        for v in parties.keys() {
            check(v)?;
        }
        let mut party_map = parties;
        for v in &declared {
            party_map.entry(*v).or_insert_with(|| v.party().to_string());
        }
        for (a, b) in &sequential_pairs {
            check(a)?;
            check(b)?;
            if a == b || party_map[a] != party_map[b] {
                return Err(DslError::InvalidSequentialPair {
                    first: *a,
                    second: *b,
                });
            }
        }
        let mut sorted_contexts = Vec::with_capacity(contexts.len());
        for ctx in contexts {
            let mut ctx = ctx;
            for v in &ctx {
                check(v)?;
            }
            ctx.sort();
            let n = ctx.len();
            ctx.dedup();
            if ctx.len() != n || ctx.is_empty() {
                return Err(DslError::MalformedContext);
            }
            if let Some((a, b)) = sequential_pairs
                .iter()
                .find(|(a, b)| ctx.contains(a) && ctx.contains(b))
            {
                return Err(DslError::InconsistentContext {
                    first: *a,
                    second: *b,
                    line: None,
                });
            }
            sorted_contexts.push(ctx);
        }
        Ok(Self {
            variables: declared,
            contexts: sorted_contexts,
            sequential_pairs,
            party_map,
        })
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn contexts(&self) -> &[Vec<VariableId>] {
        &self.contexts
    }

    pub fn sequential_pairs(&self) -> &[(VariableId, VariableId)] {
        &self.sequential_pairs
    }

    pub fn party_map(&self) -> &BTreeMap<VariableId, String> {
        &self.party_map
    }

    pub fn contains(&self, v: VariableId) -> bool {
        self.variables.binary_search(&v).is_ok()
    }

    pub fn party_of(&self, v: VariableId) -> Option<&str> {
        self.party_map.get(&v).map(String::as_str)
    }

    /// Distinct party labels in sorted order.
    pub fn parties(&self) -> Vec<&str> {
        let mut p: Vec<&str> = self.party_map.values().map(String::as_str).collect();
        p.sort();
        p.dedup();
        p
    }

    /// Index of the first declared context containing both variables.
    pub fn shared_context(&self, a: VariableId, b: VariableId) -> Option<usize> {
        self.contexts
            .iter()
            .position(|c| c.contains(&a) && c.contains(&b))
    }

    /// The declared time order of `a` and `b`, if they form a sequential pair.
    pub fn sequential_order(&self, a: VariableId, b: VariableId) -> Option<(VariableId, VariableId)> {
        self.sequential_pairs
            .iter()
            .copied()
            .find(|&(x, y)| (x == a && y == b) || (x == b && y == a))
    }

    /// Copy without the variables of the given party; contexts that lose
    /// members shrink, and empty ones disappear.
    pub fn without_party(&self, party: &str) -> Result<Self, DslError> {
        let keep = |v: &VariableId| self.party_map[v] != party;
        let variables: Vec<VariableId> = self.variables.iter().copied().filter(keep).collect();
        let mut contexts: Vec<Vec<VariableId>> = Vec::new();
        for c in &self.contexts {
            let c: Vec<VariableId> = c.iter().copied().filter(keep).collect();
            if !c.is_empty() && !contexts.contains(&c) {
                contexts.push(c);
            }
        }
        let sequential = self
            .sequential_pairs
            .iter()
            .copied()
            .filter(|(a, b)| keep(a) && keep(b))
            .collect();
        let parties = self
            .party_map
            .iter()
            .filter(|(v, _)| keep(v))
            .map(|(v, p)| (*v, p.clone()))
            .collect();
        Self::new(variables, contexts, sequential, parties)
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |vs: &[VariableId]| {
            vs.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(f, "variables: {}", join(&self.variables))?;
        let mut by_party: BTreeMap<&str, Vec<VariableId>> = BTreeMap::new();
        for (v, p) in &self.party_map {
            by_party.entry(p).or_default().push(*v);
        }
        for (p, vs) in by_party {
            writeln!(f, "party {p}: {}", join(&vs))?;
        }
        for c in &self.contexts {
            writeln!(f, "context: {}", join(c))?;
        }
        for (a, b) in &self.sequential_pairs {
            writeln!(f, "sequential: {a} {b}")?;
        }
        Ok(())
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, DslError> {
    let mut variables: Option<Vec<VariableId>> = None;
    let mut contexts: Vec<(usize, Vec<VariableId>)> = Vec::new();
    let mut sequential: Vec<(usize, (VariableId, VariableId))> = Vec::new();
    let mut parties: Vec<(usize, String, Vec<VariableId>)> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once(':') else {
            return Err(DslError::Syntax {
                line,
                column: 1,
                message: "expected `key: value`".into(),
            });
        };
        let value_column = raw.find(':').map(|c| c + 2).unwrap_or(1);
        let names = parse_names(value, line, value_column)?;
        let mut key_words = key.split_whitespace();
        match (key_words.next(), key_words.next(), key_words.next()) {
            (Some("variables"), None, None) => {
                if variables.is_some() {
                    return Err(DslError::Syntax {
                        line,
                        column: 1,
                        message: "`variables` declared twice".into(),
                    });
                }
                variables = Some(names);
            }
            (Some("party"), Some(label), None) => parties.push((line, label.to_string(), names)),
            (Some("context"), None, None) => contexts.push((line, names)),
            (Some("sequential"), None, None) => {
                if names.len() != 2 {
                    return Err(DslError::Syntax {
                        line,
                        column: value_column,
                        message: "a sequential pair names exactly two variables".into(),
                    });
                }
                sequential.push((line, (names[0], names[1])));
            }
            _ => {
                return Err(DslError::Syntax {
                    line,
                    column: 1,
                    message: format!("unknown declaration `{}`", key.trim()),
                })
            }
        }
    }

    let variables = variables.ok_or(DslError::Syntax {
        line: 1,
        column: 1,
        message: "missing `variables:` declaration".into(),
    })?;
    // Line-aware pre-checks so errors point at the offending declaration.
    let declared = |v: &VariableId| variables.contains(v);
    let mut party_map = BTreeMap::new();
    for (line, label, vs) in &parties {
        for v in vs {
            if !declared(v) {
                return Err(DslError::UndeclaredVariable {
                    variable: *v,
                    line: Some(*line),
                });
            }
            if party_map.insert(*v, label.clone()).is_some() {
                return Err(DslError::Syntax {
                    line: *line,
                    column: 1,
                    message: format!("`{v}` assigned to more than one party"),
                });
            }
        }
    }
    for (line, (a, b)) in &sequential {
        for v in [a, b] {
            if !declared(v) {
                return Err(DslError::UndeclaredVariable {
                    variable: *v,
                    line: Some(*line),
                });
            }
        }
    }
    for (line, ctx) in &contexts {
        for v in ctx {
            if !declared(v) {
                return Err(DslError::UndeclaredVariable {
                    variable: *v,
                    line: Some(*line),
                });
            }
        }
        if let Some((_, (a, b))) = sequential
            .iter()
            .find(|(_, (a, b))| ctx.contains(a) && ctx.contains(b))
        {
            return Err(DslError::InconsistentContext {
                first: *a,
                second: *b,
                line: Some(*line),
            });
        }
    }
    ScenarioSpec::new(
        variables,
        contexts.into_iter().map(|(_, c)| c).collect(),
        sequential.into_iter().map(|(_, p)| p).collect(),
        party_map,
    )
}

fn parse_names(value: &str, line: usize, column: usize) -> Result<Vec<VariableId>, DslError> {
    value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<VariableId>().map_err(|e| DslError::Syntax {
                line,
                column,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::var;

    const MONOGAMY: &str = include_str!("../../fixtures/monogamy.scn");

    #[test]
    fn monogamy_scenario() {
        let s = parse_scenario(MONOGAMY).unwrap();
        assert_eq!(s.variables().len(), 7);
        let intra_x = s
            .contexts()
            .iter()
            .filter(|c| c.iter().all(|v| v.party() == 'X'))
            .count();
        assert_eq!(intra_x, 5);
        for j in 1..=5u32 {
            for k in (1..=5u32).filter(|&k| k != j) {
                let d = (j as i64 - k as i64).rem_euclid(5);
                let compatible = s
                    .shared_context(VariableId::indexed('X', j), VariableId::indexed('X', k))
                    .is_some();
                assert_eq!(compatible, d == 1 || d == 4, "X{j} X{k}");
            }
            for y in ["Y1", "Y2"] {
                assert!(s.shared_context(VariableId::indexed('X', j), var(y)).is_some());
            }
        }
        assert_eq!(s.party_of(var("Y2")), Some("B"));
        assert_eq!(s.parties(), vec!["A", "B"]);
    }

    #[test]
    fn single_variable_no_contexts() {
        let s = parse_scenario("variables: X1\n").unwrap();
        assert!(s.contexts().is_empty());
        assert_eq!(s.party_of(var("X1")), Some("X"));
    }

    #[test]
    fn undeclared_variable_in_context() {
        let err = parse_scenario("variables: X1 Y1\n\ncontext: X1 Y2\n").unwrap_err();
        assert_eq!(
            err,
            DslError::UndeclaredVariable {
                variable: var("Y2"),
                line: Some(3)
            }
        );
    }

    #[test]
    fn context_mixing_sequential_pair() {
        let err =
            parse_scenario("variables: X1 X2\nsequential: X1 X2\ncontext: X1 X2\n").unwrap_err();
        assert!(matches!(err, DslError::InconsistentContext { line: Some(3), .. }));
    }

    #[test]
    fn sequential_pair_must_be_intra_party() {
        let err = parse_scenario("variables: X1 Y1\nsequential: X1 Y1\n").unwrap_err();
        assert!(matches!(err, DslError::InvalidSequentialPair { .. }));
    }

    #[test]
    fn display_round_trips() {
        let s = parse_scenario(MONOGAMY).unwrap();
        let again = parse_scenario(&s.to_string()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn dropping_a_party() {
        let s = parse_scenario(MONOGAMY).unwrap().without_party("B").unwrap();
        assert_eq!(s.variables().len(), 5);
        assert_eq!(s.contexts().len(), 5);
    }
}
