use serde::{Deserialize, Serialize};

use super::simplex::{simplex_solve, LpProblem, LpStatus, Relation, Sense};
use super::LhvError;
use crate::dsl::{ScenarioSpec, VariableId};
use crate::poly::MultilinearPoly;

/// Outcome probabilities for one context, indexed like deterministic
/// assignments (first variable most significant, set bit = +1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBehavior {
    pub context: Vec<VariableId>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdOptimum {
    pub value: f64,
    pub behavior: Vec<ContextBehavior>,
    /// True when marginal-consistency rows were left out.
    pub relaxed: bool,
}

fn bit(k: usize, width: usize, position: usize) -> i8 {
    if (k >> (width - 1 - position)) & 1 == 1 {
        1
    } else {
        -1
    }
}

/// Optimizes `objective` over context-wise outcome tables that are
/// normalized and agree on the marginals of every shared variable set.
/// Each monomial is read from the first declared context containing it.
/// With `relax` the agreement rows are dropped.
pub fn nodisturbance_optimum(
    scenario: &ScenarioSpec,
    objective: &MultilinearPoly,
    sense: Sense,
    relax: bool,
) -> Result<NdOptimum, LhvError> {
    let contexts = scenario.contexts();
    let mut offsets = Vec::with_capacity(contexts.len());
    let mut columns = 0usize;
    for c in contexts {
        if c.len() > 16 {
            return Err(LhvError::TooManyVariables { count: c.len(), cap: 16 });
        }
        offsets.push(columns);
        columns += 1 << c.len();
    }

    let mut cost = vec![0.0; columns];
    let mut constant = 0.0;
    for (vars, coefficient) in objective.iter() {
        if vars.is_empty() {
            constant += coefficient as f64;
            continue;
        }
        let Some(ci) = contexts
            .iter()
            .position(|c| vars.iter().all(|v| c.binary_search(v).is_ok()))
        else {
            let label: String = vars.iter().map(ToString::to_string).collect();
            return Err(LhvError::TermOutsideContext(label));
        };
        let ctx = &contexts[ci];
        let idx: Vec<usize> = vars.iter().map(|v| ctx.binary_search(v).unwrap()).collect();
        for k in 0..1usize << ctx.len() {
            let sign: i8 = idx.iter().map(|&i| bit(k, ctx.len(), i)).product();
            cost[offsets[ci] + k] += coefficient as f64 * f64::from(sign);
        }
    }

    let mut lp = LpProblem::new(sense, cost);
    for (ci, c) in contexts.iter().enumerate() {
        let mut row = vec![0.0; columns];
        row[offsets[ci]..offsets[ci] + (1 << c.len())].fill(1.0);
        lp.add(row, Relation::Eq, 1.0);
    }
    if !relax {
        for i in 0..contexts.len() {
            for j in i + 1..contexts.len() {
                let shared: Vec<VariableId> = contexts[i]
                    .iter()
                    .filter(|v| contexts[j].binary_search(v).is_ok())
                    .copied()
                    .collect();
                if shared.is_empty() {
                    continue;
                }
                let pi: Vec<usize> = shared.iter().map(|v| contexts[i].binary_search(v).unwrap()).collect();
                let pj: Vec<usize> = shared.iter().map(|v| contexts[j].binary_search(v).unwrap()).collect();
                // The all-(+1) marginal follows from normalization.
                for m in 0..(1usize << shared.len()) - 1 {
                    let mut row = vec![0.0; columns];
                    for k in 0..1usize << contexts[i].len() {
                        if pi.iter().enumerate().all(|(s, &p)| bit(m, shared.len(), s) == bit(k, contexts[i].len(), p)) {
                            row[offsets[i] + k] += 1.0;
                        }
                    }
                    for k in 0..1usize << contexts[j].len() {
                        if pj.iter().enumerate().all(|(s, &p)| bit(m, shared.len(), s) == bit(k, contexts[j].len(), p)) {
                            row[offsets[j] + k] -= 1.0;
                        }
                    }
                    lp.add(row, Relation::Eq, 0.0);
                }
            }
        }
    }

    let solution = simplex_solve(&lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(LhvError::UnexpectedLpStatus(solution.status));
    }
    let behavior = contexts
        .iter()
        .enumerate()
        .map(|(ci, c)| ContextBehavior {
            context: c.clone(),
            probabilities: solution.primal[offsets[ci]..offsets[ci] + (1 << c.len())].to_vec(),
        })
        .collect();
    Ok(NdOptimum {
        value: solution.objective + constant,
        behavior,
        relaxed: relax,
    })
}
