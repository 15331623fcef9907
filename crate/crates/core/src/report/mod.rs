//! Run reports behind the command-line tool: input loading, one function per
//! subcommand, and the reproduction targets.
//!
//! Every report serializes to JSON with sorted keys and no timing data, so
//! two runs with the same inputs and seed print identical bytes.

mod commands;
mod observations;
mod reproduce;

pub use commands::{
    bound_report, check_report, derive_report, optimize_report, scan_report, simulate_report,
    CheckVerdict, OptimizeOptions, SimulateOptions, StateChoice,
};
pub use observations::parse_observations;
pub use reproduce::{reproduce, reproduce_all, run_target, Check, CheckValue, Target, TargetOptions};

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::dsl::{parse_rs, parse_scenario, DslError, RsExpression, ScenarioSpec};
use crate::lhv::LhvError;
use crate::optimize::OptimizeError;
use crate::poly::DeriveError;
use crate::quantum::QuantumError;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_130_517;

/// Shots used when none are given.
pub const DEFAULT_SHOTS: u64 = 1_000_000;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: DslError,
    },
    #[error("{path}, line {line}: {message}")]
    Observation {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Derive(#[from] DeriveError),
    #[error(transparent)]
    Lhv(#[from] LhvError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("unknown target `{0}`; known targets: {known}", known = reproduce::TARGET_NAMES.join(", "))]
    UnknownTarget(String),
    #[error("{0}")]
    Unsupported(String),
}

/// A named input text, usually a file.
#[derive(Debug, Clone)]
pub struct Source {
    pub name: String,
    pub text: String,
}

impl Source {
    pub fn read(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self {
            name: path.display().to_string(),
            text,
        })
    }

    pub fn inline(name: &str, text: &str) -> Self {
        Self {
            name: name.to_string(),
            text: text.to_string(),
        }
    }

    pub fn expression(&self) -> Result<RsExpression, ReportError> {
        parse_rs(&self.text).map_err(|source| ReportError::Parse {
            path: self.name.clone(),
            source,
        })
    }

    pub fn scenario(&self) -> Result<ScenarioSpec, ReportError> {
        parse_scenario(&self.text).map_err(|source| ReportError::Parse {
            path: self.name.clone(),
            source,
        })
    }
}

/// A computed number with the tolerance it is accurate to. Exact results
/// carry tolerance 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub tolerance: f64,
}

impl Quantity {
    pub fn exact(value: f64) -> Self {
        Self { value, tolerance: 0.0 }
    }

    pub fn within(value: f64, tolerance: f64) -> Self {
        Self { value, tolerance }
    }
}

/// A sampled number with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// What one subcommand produced: the inputs it saw, a structured result and
/// a short human summary.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub result: Value,
    #[serde(skip)]
    pub summary: Vec<String>,
    /// Plot-ready table for `--format csv`, when the command has one.
    #[serde(skip)]
    pub csv: Option<String>,
}

impl Report {
    pub(crate) fn new(command: &str, inputs: impl Serialize, result: impl Serialize) -> Self {
        Self {
            command: command.to_string(),
            inputs: serde_json::to_value(inputs).expect("report inputs serialize"),
            result: serde_json::to_value(result).expect("report result serializes"),
            summary: Vec::new(),
            csv: None,
        }
    }

    pub(crate) fn line(&mut self, text: impl Into<String>) {
        self.summary.push(text.into());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_human(&self) -> String {
        let mut s = String::new();
        for l in &self.summary {
            let _ = writeln!(s, "{l}");
        }
        s
    }
}

/// Shortest decimal that round-trips, for summaries.
pub(crate) fn num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.10}").trim_end_matches('0').to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_keys_are_sorted_and_stable() {
        let r = Report::new("x", serde_json::json!({"b": 1, "a": 2}), Quantity::exact(1.0));
        let j = r.to_json();
        assert!(j.find("\"a\"").unwrap() < j.find("\"b\"").unwrap());
        assert!(j.find("\"command\"").unwrap() < j.find("\"inputs\"").unwrap());
        assert_eq!(j, r.clone().to_json());
    }

    #[test]
    fn num_is_compact() {
        assert_eq!(num(2.0), "2");
        assert_eq!(num(-0.5), "-0.5");
        assert_eq!(num(2.0f64.sqrt() * 2.0), "2.8284271247");
    }
}
