use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg};

use serde::{Deserialize, Serialize};

use crate::dsl::{LinearForm, VariableId};

/// A product of distinct ±1 variables with an integer weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    pub variables: Vec<VariableId>,
    pub coefficient: i64,
}

/// Integer polynomial over ±1 variables with `v² = 1` applied, so every
/// monomial is a set of distinct variables. Zero coefficients are never
/// stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MultilinearPoly {
    terms: BTreeMap<Vec<VariableId>, i64>,
}

impl MultilinearPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        let mut p = Self::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn variable(v: VariableId) -> Self {
        let mut p = Self::zero();
        p.add_term(vec![v], 1);
        p
    }

    pub fn from_linear_form(form: &LinearForm) -> Self {
        let mut p = Self::zero();
        for (c, v) in form.terms() {
            p.add_term(vec![*v], *c);
        }
        p
    }

    /// Adds `coefficient · Π variables`, reducing repeated variables first.
    pub fn add_term(&mut self, mut variables: Vec<VariableId>, coefficient: i64) {
        if coefficient == 0 {
            return;
        }
        variables.sort();
        let key = reduce_sorted(&variables);
        let entry = self.terms.entry(key).or_insert(0);
        *entry += coefficient;
        if *entry == 0 {
            let key = reduce_sorted(&variables);
            self.terms.remove(&key);
        }
    }

    pub fn coefficient(&self, variables: &[VariableId]) -> i64 {
        let mut key = variables.to_vec();
        key.sort();
        self.terms.get(&reduce_sorted(&key)).copied().unwrap_or(0)
    }

    pub fn constant_term(&self) -> i64 {
        self.coefficient(&[])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Monomials in key order (constant first, then by sorted variable list).
    pub fn monomials(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().map(|(k, c)| Monomial {
            variables: k.clone(),
            coefficient: *c,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[VariableId], i64)> + '_ {
        self.terms.iter().map(|(k, c)| (k.as_slice(), *c))
    }

    /// Sorted distinct variables.
    pub fn variables(&self) -> Vec<VariableId> {
        let mut v: Vec<VariableId> = self.terms.keys().flatten().copied().collect();
        v.sort();
        v.dedup();
        v
    }

    /// Part of the polynomial made of monomials with exactly `degree` variables.
    pub fn homogeneous_part(&self, degree: usize) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.len() == degree)
                .map(|(k, c)| (k.clone(), *c))
                .collect(),
        }
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// Evaluates at a ±1 assignment. Panics if a variable is missing.
    pub fn evaluate(&self, value: impl Fn(VariableId) -> i8) -> i64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let sign: i64 = k.iter().map(|v| value(*v) as i64).product();
                c * sign
            })
            .sum()
    }

    pub fn scaled(&self, factor: i64) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c * factor);
        }
        out
    }
}

/// Removes pairs of equal neighbours from a sorted list (`v·v = 1`).
fn reduce_sorted(sorted: &[VariableId]) -> Vec<VariableId> {
    let mut out: Vec<VariableId> = Vec::with_capacity(sorted.len());
    for v in sorted {
        if out.last() == Some(v) {
            out.pop();
        } else {
            out.push(*v);
        }
    }
    out
}

/// Symmetric difference of two sorted, duplicate-free lists.
fn multiply_keys(a: &[VariableId], b: &[VariableId]) -> Vec<VariableId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl Add for &MultilinearPoly {
    type Output = MultilinearPoly;

    fn add(self, rhs: &MultilinearPoly) -> MultilinearPoly {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), *c);
        }
        out
    }
}

impl Add for MultilinearPoly {
    type Output = MultilinearPoly;

    fn add(self, rhs: MultilinearPoly) -> MultilinearPoly {
        &self + &rhs
    }
}

impl Mul for &MultilinearPoly {
    type Output = MultilinearPoly;

    fn mul(self, rhs: &MultilinearPoly) -> MultilinearPoly {
        let mut out = MultilinearPoly::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &rhs.terms {
                let key = multiply_keys(ka, kb);
                let entry = out.terms.entry(key).or_insert(0);
                *entry += ca * cb;
            }
        }
        out.terms.retain(|_, c| *c != 0);
        out
    }
}

impl Neg for &MultilinearPoly {
    type Output = MultilinearPoly;

    fn neg(self) -> MultilinearPoly {
        self.scaled(-1)
    }
}

impl fmt::Display for MultilinearPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            let magnitude = c.unsigned_abs();
            match (i, *c < 0) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if k.is_empty() {
                write!(f, "{magnitude}")?;
                continue;
            }
            if magnitude != 1 {
                write!(f, "{magnitude}*")?;
            }
            for v in k {
                write!(f, "{v}")?;
            }
        }
        Ok(())
    }
}
