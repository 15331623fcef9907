//! Text formats: sum-of-squares expressions (`.rsx`) and measurement
//! scenarios (`.scn`).

mod expr;
mod lexer;
mod scenario;
mod variable;

pub use expr::{format_rs, parse_rs, Comparator, LinearForm, RsExpression};
pub use scenario::{parse_scenario, ScenarioSpec};
pub use variable::{var, InvalidVariable, VariableId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DslError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("variable `{variable}` appears twice in one group{}", at(position))]
    DuplicateVariableInGroup {
        variable: VariableId,
        position: Option<(usize, usize)>,
    },
    #[error("zero coefficient on `{variable}`{}", at(position))]
    ZeroCoefficient {
        variable: VariableId,
        position: Option<(usize, usize)>,
    },
    #[error("a group must contain at least one term")]
    EmptyGroup,
    #[error("an expression needs at least one squared group")]
    NoGroups,
    #[error("variable `{variable}` is not declared{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    UndeclaredVariable {
        variable: VariableId,
        line: Option<usize>,
    },
    #[error("context contains the sequential pair {first}, {second}{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    InconsistentContext {
        first: VariableId,
        second: VariableId,
        line: Option<usize>,
    },
    #[error("sequential pair {first}, {second} must name two distinct variables of one party")]
    InvalidSequentialPair { first: VariableId, second: VariableId },
    #[error("a context must list distinct variables")]
    MalformedContext,
    #[error("a variable is declared more than once")]
    DuplicateDeclaration,
}

fn at(position: &Option<(usize, usize)>) -> String {
    match position {
        Some((l, c)) => format!(" at line {l}, column {c}"),
        None => String::new(),
    }
}
