use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OptimizeError;

/// Grid scan followed by compass pattern search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Points per angle in the coarse scan; reduced so that the whole grid
    /// stays within `max_grid` points.
    pub grid_points: usize,
    pub max_grid: usize,
    /// Refinement stops once the step falls below this.
    pub min_step: f64,
    /// Total objective evaluations allowed.
    pub budget: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { grid_points: 24, max_grid: 1_000_000, min_step: 1e-8, budget: 5_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub value: f64,
    pub parameters: Vec<f64>,
    pub evaluations: usize,
    /// Value at the best grid point, before refinement.
    pub grid_value: f64,
    pub converged: bool,
}

/// Points per angle actually used for `dimension` parameters.
pub fn grid_points_for(config: &SearchConfig, dimension: usize) -> usize {
    let mut g = config.grid_points.max(1);
    while dimension > 0 && (g as f64).powi(dimension as i32) > config.max_grid as f64 && g > 2 {
        g -= 1;
    }
    g
}

fn grid_point(index: usize, g: usize, dimension: usize) -> Vec<f64> {
    let mut rest = index;
    let mut p = vec![0.0; dimension];
    for slot in p.iter_mut().rev() {
        *slot = -PI + 2.0 * PI * (rest % g) as f64 / g as f64;
        rest /= g;
    }
    p
}

/// Compass search from `start` with initial `step`. Moves only on strict
/// improvement, so the incumbent never decreases.
pub fn pattern_search<F>(
    f: &F,
    start: Vec<f64>,
    start_value: f64,
    step: f64,
    config: &SearchConfig,
    mut evaluations: usize,
) -> Result<SearchResult, OptimizeError>
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = start;
    let mut best = start_value;
    let mut step = step;
    let grid_value = start_value;
    while step >= config.min_step {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                if evaluations >= config.budget {
                    return Err(OptimizeError::BudgetExhausted {
                        best: SearchResult { value: best, parameters: x, evaluations, grid_value, converged: false },
                    });
                }
                let mut y = x.clone();
                y[i] += dir * step;
                let v = f(&y);
                evaluations += 1;
                if v > best {
                    best = v;
                    x = y;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(SearchResult { value: best, parameters: x, evaluations, grid_value, converged: true })
}

/// Maximizes `f` over `dimension` angles: full grid over `[−π, π)` then
/// pattern search from the best grid point (first in scan order on ties).
pub fn maximize<F>(f: &F, dimension: usize, config: &SearchConfig) -> Result<SearchResult, OptimizeError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let g = grid_points_for(config, dimension);
    let total = g.pow(dimension as u32);
    if total > config.budget {
        return Err(OptimizeError::BudgetExhausted {
            best: SearchResult {
                value: f64::NEG_INFINITY,
                parameters: vec![0.0; dimension],
                evaluations: 0,
                grid_value: f64::NEG_INFINITY,
                converged: false,
            },
        });
    }
    let (index, value) = (0..total)
        .into_par_iter()
        .map(|k| (k, f(&grid_point(k, g, dimension))))
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        );
    if !value.is_finite() {
        return Err(OptimizeError::NonFiniteObjective);
    }
    pattern_search(f, grid_point(index, g, dimension), value, 2.0 * PI / g as f64, config, total)
}

/// Pattern search from `starts` seeded random points (no grid).
pub fn multistart<F>(
    f: &F,
    dimension: usize,
    starts: usize,
    seed: u64,
    config: &SearchConfig,
) -> Result<Vec<SearchResult>, OptimizeError>
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..starts)
        .map(|_| {
            let x: Vec<f64> = (0..dimension).map(|_| rng.random_range(-PI..PI)).collect();
            let v = f(&x);
            pattern_search(f, x, v, 0.5, config, 1)
        })
        .collect()
}
