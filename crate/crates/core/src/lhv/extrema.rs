use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::jd::DeterministicAssignment;
use super::LhvError;
use crate::dsl::VariableId;
use crate::poly::MultilinearPoly;

/// Largest variable count [`classical_extrema`] will enumerate.
pub const EXTREMA_CAP: usize = 24;

const CHUNK: u64 = 1 << 14;

/// Exact range of a polynomial over all ±1 assignments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extrema {
    pub min: i64,
    pub max: i64,
    /// Lexicographically smallest minimizer (−1 before +1, variables in order).
    pub argmin: DeterministicAssignment,
    pub argmax: DeterministicAssignment,
}

/// Assignment number `k` in lexicographic order: the first variable is the
/// most significant bit and a set bit means +1.
pub(crate) fn assignment_value(k: u64, n: usize, position: usize) -> i8 {
    if (k >> (n - 1 - position)) & 1 == 1 {
        1
    } else {
        -1
    }
}

pub(crate) fn assignment_from_index(variables: &[VariableId], k: u64) -> DeterministicAssignment {
    let n = variables.len();
    DeterministicAssignment::new(
        variables
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, assignment_value(k, n, i))),
    )
}

/// Monomials as bit masks over `variables` (same bit layout as assignment
/// indices).
pub(crate) fn monomial_masks(poly: &MultilinearPoly, variables: &[VariableId]) -> Vec<(u64, i64)> {
    let n = variables.len();
    poly.iter()
        .map(|(vars, c)| {
            let mask = vars.iter().fold(0u64, |m, v| {
                let i = variables.binary_search(v).expect("variable listed");
                m | (1 << (n - 1 - i))
            });
            (mask, c)
        })
        .collect()
}

#[inline]
pub(crate) fn evaluate_masks(masks: &[(u64, i64)], k: u64) -> i64 {
    let negative = !k;
    masks
        .iter()
        .map(|&(m, c)| if (m & negative).count_ones() & 1 == 1 { -c } else { c })
        .sum()
}

/// Minimum and maximum of `poly` over every deterministic assignment of its
/// variables, by exhaustive enumeration split across worker threads.
pub fn classical_extrema(poly: &MultilinearPoly) -> Result<Extrema, LhvError> {
    let variables = poly.variables();
    let n = variables.len();
    if n > EXTREMA_CAP {
        return Err(LhvError::TooManyVariables { count: n, cap: EXTREMA_CAP });
    }
    let masks = monomial_masks(poly, &variables);
    let total = 1u64 << n;
    let chunks = total.div_ceil(CHUNK);
    // (min, argmin, max, argmax); ties keep the smaller index.
    let (min, kmin, max, kmax) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut best = (i64::MAX, 0, i64::MIN, 0);
            for k in start..end {
                let v = evaluate_masks(&masks, k);
                if v < best.0 {
                    best.0 = v;
                    best.1 = k;
                }
                if v > best.2 {
                    best.2 = v;
                    best.3 = k;
                }
            }
            best
        })
        .reduce(
            || (i64::MAX, u64::MAX, i64::MIN, u64::MAX),
            |a, b| {
                let lo = if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { (b.0, b.1) } else { (a.0, a.1) };
                let hi = if b.2 > a.2 || (b.2 == a.2 && b.3 < a.3) { (b.2, b.3) } else { (a.2, a.3) };
                (lo.0, lo.1, hi.0, hi.1)
            },
        );
    Ok(Extrema {
        min,
        max,
        argmin: assignment_from_index(&variables, kmin),
        argmax: assignment_from_index(&variables, kmax),
    })
}
