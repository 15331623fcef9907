use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A ±1-valued observable, written `<Letter><digits>` (`X1`, `Y2`) or as a
/// bare letter (`J`, `K`).
///
/// Ordering is by party letter first, then index, with a bare letter sorting
/// before any indexed variable of the same party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId {
    party: char,
    index: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid variable name `{0}`: expected an uppercase letter optionally followed by digits")]
pub struct InvalidVariable(pub String);

impl VariableId {
    pub fn new(party: char, index: Option<u32>) -> Result<Self, InvalidVariable> {
        if !party.is_ascii_uppercase() {
            let name = match index {
                Some(i) => format!("{party}{i}"),
                None => party.to_string(),
            };
            return Err(InvalidVariable(name));
        }
        Ok(Self { party, index })
    }

    pub fn indexed(party: char, index: u32) -> Self {
        Self::new(party, Some(index)).expect("party letter must be A-Z")
    }

    pub fn bare(party: char) -> Self {
        Self::new(party, None).expect("party letter must be A-Z")
    }

    pub fn party(&self) -> char {
        self.party
    }

    pub fn index(&self) -> Option<u32> {
        self.index
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}{}", self.party, i),
            None => write!(f, "{}", self.party),
        }
    }
}

impl FromStr for VariableId {
    type Err = InvalidVariable;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let party = chars.next().ok_or_else(|| InvalidVariable(s.to_string()))?;
        let digits = chars.as_str();
        if !party.is_ascii_uppercase() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(InvalidVariable(s.to_string()));
        }
        let index = if digits.is_empty() {
            None
        } else {
            Some(digits.parse().map_err(|_| InvalidVariable(s.to_string()))?)
        };
        Ok(Self { party, index })
    }
}

impl Serialize for VariableId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VariableId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and fixtures: `var("X1")`.
///
/// Panics on a malformed name.
pub fn var(name: &str) -> VariableId {
    name.parse().unwrap_or_else(|e| panic!("{e}"))
}
