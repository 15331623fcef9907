//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Sized for the small, well-conditioned programs built in this crate:
//! a few dozen rows and up to a few hundred thousand columns.

use serde::{Deserialize, Serialize};

/// Reduced costs below `-OPTIMALITY_TOL` are improving.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Phase-one residual above this means infeasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Ratio-test entries must exceed this to be pivot candidates.
const PIVOT_TOL: f64 = 1e-9;
/// Any pivot this small is treated as a breakdown.
const BREAKDOWN_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coefficients: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self {
            coefficients,
            relation,
            rhs,
        }
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.coefficients.iter().zip(x).map(|(a, v)| a * v).sum();
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `optimize objective·x` subject to the rows and `lower <= x <= upper`.
/// Bounds may be infinite; the default is `[0, +inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coefficients: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint::new(coefficients, relation, rhs));
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(l, u), &v)| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective at `primal`; NaN unless optimal.
    pub objective: f64,
    /// Empty unless optimal.
    pub primal: Vec<f64>,
    /// For infeasible problems: multipliers `y`, one per constraint row,
    /// with `y·b > 0` while `y·A ≤ 0` on every column (after bound shifts).
    pub farkas: Option<Vec<f64>>,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimplexError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical breakdown: pivot {pivot:.3e} below tolerance")]
    NumericalBreakdown { pivot: f64 },
    #[error("pivot limit of {0} reached")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy)]
enum Mapping {
    Shift { col: usize, lower: f64 },
    Mirror { col: usize, upper: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn pivot(&mut self, r: usize, c: usize) -> Result<(), SimplexError> {
        let w = self.width;
        let p = self.data[r * w + c];
        if p.abs() < BREAKDOWN_TOL {
            return Err(SimplexError::NumericalBreakdown { pivot: p });
        }
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(SimplexError::IterationLimit(MAX_PIVOTS));
        }
        let inv = 1.0 / p;
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x -= f * p;
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
        Ok(())
    }

    /// Runs Bland's rule on the objective row until optimal or unbounded.
    /// Columns `>= allowed` never enter. Returns false when unbounded.
    fn optimize(&mut self, allowed: usize) -> Result<bool, SimplexError> {
        let obj = self.rows;
        let rhs = self.rhs_col();
        loop {
            let Some(c) = (0..allowed).find(|&j| self.at(obj, j) < -OPTIMALITY_TOL) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.at(i, rhs) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12
                            || ((ratio - br).abs() <= 1e-12 && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, c)?,
                None => return Ok(false),
            }
        }
    }

    fn set_objective(&mut self, costs: &[f64]) {
        let obj = self.rows;
        let w = self.width;
        for j in 0..w {
            self.data[obj * w + j] = if j < costs.len() { costs[j] } else { 0.0 };
        }
        for i in 0..self.rows {
            let cb = costs.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb == 0.0 {
                continue;
            }
            for j in 0..w {
                self.data[obj * w + j] -= cb * self.data[i * w + j];
            }
        }
    }
}

/// Solves an [`LpProblem`]. Infeasible and unbounded programs are reported
/// through [`LpStatus`]; errors are reserved for malformed input and
/// numerical failure.
pub fn simplex_solve(problem: &LpProblem) -> Result<LpSolution, SimplexError> {
    let n = problem.num_vars();
    if problem.bounds.len() != n {
        return Err(SimplexError::DimensionMismatch(format!(
            "{} bounds for {n} variables",
            problem.bounds.len()
        )));
    }
    for (i, c) in problem.constraints.iter().enumerate() {
        if c.coefficients.len() != n {
            return Err(SimplexError::DimensionMismatch(format!(
                "row {i} has {} coefficients for {n} variables",
                c.coefficients.len()
            )));
        }
        if !c.rhs.is_finite() || c.coefficients.iter().any(|a| !a.is_finite()) {
            return Err(SimplexError::DimensionMismatch(format!(
                "row {i} has a non-finite entry"
            )));
        }
    }
    if problem.objective.iter().any(|c| !c.is_finite()) {
        return Err(SimplexError::DimensionMismatch("non-finite objective".into()));
    }

    // Substitute bounded variables by non-negative ones.
    let mut mappings = Vec::with_capacity(n);
    let mut cols = 0usize;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for (j, &(l, u)) in problem.bounds.iter().enumerate() {
        if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
            return Err(SimplexError::DimensionMismatch(format!(
                "variable {j} has empty bounds [{l}, {u}]"
            )));
        }
        if l.is_finite() {
            if u.is_finite() {
                upper_rows.push((cols, u - l));
            }
            mappings.push(Mapping::Shift { col: cols, lower: l });
            cols += 1;
        } else if u.is_finite() {
            mappings.push(Mapping::Mirror { col: cols, upper: u });
            cols += 1;
        } else {
            mappings.push(Mapping::Split {
                pos: cols,
                neg: cols + 1,
            });
            cols += 2;
        }
    }

    // Rows over substituted columns, before slacks.
    let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::new();
    for c in &problem.constraints {
        let mut entries = Vec::new();
        let mut rhs = c.rhs;
        for (a, m) in c.coefficients.iter().zip(&mappings) {
            if *a == 0.0 {
                continue;
            }
            match *m {
                Mapping::Shift { col, lower } => {
                    entries.push((col, *a));
                    rhs -= a * lower;
                }
                Mapping::Mirror { col, upper } => {
                    entries.push((col, -a));
                    rhs -= a * upper;
                }
                Mapping::Split { pos, neg } => {
                    entries.push((pos, *a));
                    entries.push((neg, -a));
                }
            }
        }
        rows.push((entries, c.relation, rhs));
    }
    for &(col, width) in &upper_rows {
        rows.push((vec![(col, 1.0)], Relation::Le, width));
    }

    let m = rows.len();
    let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let structural = cols + slack_count;
    let width = structural + m + 1;
    let mut t = Tableau {
        rows: m,
        width,
        data: vec![0.0; (m + 1) * width],
        basis: (structural..structural + m).collect(),
        pivots: 0,
    };
    let mut signs = vec![1.0; m];
    let mut slack = cols;
    for (i, (entries, rel, rhs)) in rows.iter().enumerate() {
        let row = &mut t.data[i * width..(i + 1) * width];
        for &(col, a) in entries {
            row[col] += a;
        }
        match rel {
            Relation::Le => {
                row[slack] = 1.0;
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -1.0;
                slack += 1;
            }
            Relation::Eq => {}
        }
        row[width - 1] = *rhs;
        if *rhs < 0.0 {
            signs[i] = -1.0;
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[structural + i] = 1.0;
    }

    // Phase one: minimize the sum of artificials.
    let mut phase_one = vec![0.0; structural + m];
    for c in &mut phase_one[structural..] {
        *c = 1.0;
    }
    t.set_objective(&phase_one);
    t.optimize(structural + m)?;
    let residual = -t.at(m, width - 1);
    if residual > FEASIBILITY_TOL {
        let farkas = (0..problem.constraints.len())
            .map(|i| signs[i] * (1.0 - t.at(m, structural + i)))
            .collect();
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective: f64::NAN,
            primal: Vec::new(),
            farkas: Some(farkas),
            pivots: t.pivots,
        });
    }

    // Drive zero-level artificials out of the basis where possible.
    for r in 0..m {
        if t.basis[r] < structural {
            continue;
        }
        let candidate = (0..structural)
            .filter(|&j| t.at(r, j).abs() > PIVOT_TOL)
            .max_by(|&a, &b| t.at(r, a).abs().total_cmp(&t.at(r, b).abs()));
        if let Some(j) = candidate {
            t.pivot(r, j)?;
        }
    }

    // Phase two.
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut costs = vec![0.0; structural];
    for (c, m) in problem.objective.iter().zip(&mappings) {
        match *m {
            Mapping::Shift { col, .. } => costs[col] = sign * c,
            Mapping::Mirror { col, .. } => costs[col] = -sign * c,
            Mapping::Split { pos, neg } => {
                costs[pos] = sign * c;
                costs[neg] = -sign * c;
            }
        }
    }
    t.set_objective(&costs);
    if !t.optimize(structural)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: f64::NAN,
            primal: Vec::new(),
            farkas: None,
            pivots: t.pivots,
        });
    }

    let mut z = vec![0.0; structural];
    for r in 0..m {
        if t.basis[r] < structural {
            z[t.basis[r]] = t.at(r, width - 1);
        }
    }
    let x: Vec<f64> = mappings
        .iter()
        .map(|m| match *m {
            Mapping::Shift { col, lower } => lower + z[col],
            Mapping::Mirror { col, upper } => upper - z[col],
            Mapping::Split { pos, neg } => z[pos] - z[neg],
        })
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: problem.objective_value(&x),
        primal: x,
        farkas: None,
        pivots: t.pivots,
    })
}
