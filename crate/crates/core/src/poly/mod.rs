//! Expansion of sums of squares into multilinear polynomials and the
//! correlation inequalities read off from them.

mod derive;
mod families;
mod multilinear;

pub use derive::{
    classify, derive_inequality, expand, validate_odd_groups, Classification,
    CorrelationInequality, CorrelationTerm, DeriveError, DeriveWarning, Derivation, GroupReport,
    GroupVerdict, TermKind,
};
pub use families::{chained_cycle_source, cycle_sum};
pub use multilinear::{Monomial, MultilinearPoly};
pub(crate) use derive::ratio_string;
