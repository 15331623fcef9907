use serde::{Deserialize, Serialize};

use super::LhvError;

/// Agreement required between the two tables' shared marginals.
pub const PROVISO_TOL: f64 = 1e-9;

/// Tables indexed by outcome bits, first variable most significant,
/// set bit = +1. `first` is over `(x1, x2, y2)`, `second` over
/// `(x2, x3, y2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripartiteTables {
    pub first: [f64; 8],
    pub second: [f64; 8],
}

/// Distribution over `(x1, x2, x3, y2)`, same indexing convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluedDistribution {
    pub probabilities: [f64; 16],
}

fn idx3(a: usize, b: usize, c: usize) -> usize {
    (a << 2) | (b << 1) | c
}

impl GluedDistribution {
    pub fn probability(&self, x1: usize, x2: usize, x3: usize, y2: usize) -> f64 {
        self.probabilities[(x1 << 3) | (x2 << 2) | (x3 << 1) | y2]
    }

    /// Marginal over `(x1, x2, y2)`.
    pub fn first_marginal(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (x1, x2, x3, y2) in cells() {
            out[idx3(x1, x2, y2)] += self.probability(x1, x2, x3, y2);
        }
        out
    }

    /// Marginal over `(x2, x3, y2)`.
    pub fn second_marginal(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (x1, x2, x3, y2) in cells() {
            out[idx3(x2, x3, y2)] += self.probability(x1, x2, x3, y2);
        }
        out
    }
}

fn cells() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|k| ((k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1))
}

fn validate(table: &[f64; 8], name: &str) -> Result<(), LhvError> {
    if table.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(LhvError::InvalidObservation(format!("{name} table has a negative entry")));
    }
    let total: f64 = table.iter().sum();
    if (total - 1.0).abs() > PROVISO_TOL {
        return Err(LhvError::InvalidObservation(format!("{name} table sums to {total}")));
    }
    Ok(())
}

/// Glues the two tables along `(x2, y2)`:
/// `p(x1,x2,x3,y2) = p(x1,x2,y2)·p(x2,x3,y2) / p(x2,y2)`.
///
/// The result carries no `y1` argument; the product formula has none.
/// `p(x2,y2)` is read from the first table.
pub fn reconstruct_pc(tables: &TripartiteTables) -> Result<GluedDistribution, LhvError> {
    validate(&tables.first, "first")?;
    validate(&tables.second, "second")?;
    let mut pair = [[0.0; 2]; 2];
    for x2 in 0..2 {
        for y2 in 0..2 {
            let left: f64 = (0..2).map(|x1| tables.first[idx3(x1, x2, y2)]).sum();
            let right: f64 = (0..2).map(|x3| tables.second[idx3(x2, x3, y2)]).sum();
            if (left - right).abs() > PROVISO_TOL {
                return Err(LhvError::ProvisoViolated {
                    x2: if x2 == 1 { 1 } else { -1 },
                    y2: if y2 == 1 { 1 } else { -1 },
                    first: left,
                    second: right,
                });
            }
            pair[x2][y2] = left;
        }
    }
    glue(&tables.first, &tables.second, &pair)
}

pub(crate) fn glue(
    first: &[f64; 8],
    second: &[f64; 8],
    pair: &[[f64; 2]; 2],
) -> Result<GluedDistribution, LhvError> {
    let mut probabilities = [0.0; 16];
    for (k, (x1, x2, x3, y2)) in cells().enumerate() {
        let numerator = first[idx3(x1, x2, y2)] * second[idx3(x2, x3, y2)];
        if numerator == 0.0 {
            continue;
        }
        let denominator = pair[x2][y2];
        if denominator <= 0.0 {
            return Err(LhvError::DivisionByZeroCell {
                x2: if x2 == 1 { 1 } else { -1 },
                y2: if y2 == 1 { 1 } else { -1 },
            });
        }
        probabilities[k] = numerator / denominator;
    }
    Ok(GluedDistribution { probabilities })
}
