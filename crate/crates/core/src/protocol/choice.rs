use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// What one party measures: nothing, the first observable, the second, or
/// the first at `t1` followed by the second at `t2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LocalChoice {
    None,
    First,
    Second,
    Both,
}

impl LocalChoice {
    pub const ALL: [LocalChoice; 4] = [Self::None, Self::First, Self::Second, Self::Both];

    /// Observable measured at `t1`, if any (1 or 2).
    pub fn at_t1(self) -> Option<u8> {
        match self {
            Self::None => None,
            Self::First | Self::Both => Some(1),
            Self::Second => Some(2),
        }
    }

    /// Observable measured at `t2`, if any.
    pub fn at_t2(self) -> Option<u8> {
        match self {
            Self::Both => Some(2),
            _ => None,
        }
    }

    fn token(self, party: char) -> String {
        match self {
            Self::None => "-".into(),
            Self::First => format!("{party}1"),
            Self::Second => format!("{party}2"),
            Self::Both => format!("{party}1{party}2"),
        }
    }

    fn parse(token: &str, party: char) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.token(party) == token)
    }
}

/// One of the 16 measurement-choice pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MeasurementChoice {
    pub alice: LocalChoice,
    pub bob: LocalChoice,
}

impl MeasurementChoice {
    pub fn new(alice: LocalChoice, bob: LocalChoice) -> Self {
        Self { alice, bob }
    }

    /// The 4×4 grid, Alice's choice varying slowest.
    pub fn all() -> Vec<Self> {
        LocalChoice::ALL
            .into_iter()
            .flat_map(|a| LocalChoice::ALL.into_iter().map(move |b| Self::new(a, b)))
            .collect()
    }

    /// Choices yielding at least one admissible datum, in grid order.
    pub fn data_yielding() -> Vec<Self> {
        Self::all().into_iter().filter(|c| !admissible_data(*c).is_empty()).collect()
    }
}

impl fmt::Display for MeasurementChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.alice.token('X'), self.bob.token('Y'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid measurement choice `{0}`")]
pub struct InvalidChoice(pub String);

impl FromStr for MeasurementChoice {
    type Err = InvalidChoice;

    fn from_str(s: &str) -> Result<Self, InvalidChoice> {
        let mut parts = s.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(InvalidChoice(s.into()));
        };
        match (LocalChoice::parse(a, 'X'), LocalChoice::parse(b, 'Y')) {
            (Some(alice), Some(bob)) => Ok(Self { alice, bob }),
            _ => Err(InvalidChoice(s.into())),
        }
    }
}

/// A correlator the protocol can record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Datum {
    X1X2,
    X1Y1,
    X1Y2,
    X2Y1,
    Y1Y2,
}

impl Datum {
    pub const ALL: [Datum; 5] = [Self::X1X2, Self::X1Y1, Self::X1Y2, Self::X2Y1, Self::Y1Y2];

    pub fn label(self) -> &'static str {
        match self {
            Self::X1X2 => "<X1X2>",
            Self::X1Y1 => "<X1Y1>",
            Self::X1Y2 => "<X1Y2>",
            Self::X2Y1 => "<X2Y1>",
            Self::Y1Y2 => "<Y1Y2>",
        }
    }

    /// Coefficient in the hybrid expression (0 for `⟨X1Y1⟩`).
    pub fn hybrid_coefficient(self) -> i8 {
        match self {
            Self::X1X2 | Self::X1Y2 | Self::Y1Y2 => 1,
            Self::X2Y1 => -1,
            Self::X1Y1 => 0,
        }
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Correlators recorded from one shot of `choice`. Seven choices yield none.
pub fn admissible_data(choice: MeasurementChoice) -> Vec<Datum> {
    use LocalChoice::*;
    match (choice.alice, choice.bob) {
        (None, Both) => vec![Datum::Y1Y2],
        (Both, None) => vec![Datum::X1X2],
        (First, Second) => vec![Datum::X1Y2],
        (Second, First) => vec![Datum::X2Y1],
        (First, Both) => vec![Datum::X1Y1, Datum::Y1Y2],
        (Both, First) => vec![Datum::X1X2],
        (Second, Both) => vec![Datum::X2Y1, Datum::Y1Y2],
        (Both, Second) => vec![Datum::X1X2, Datum::X1Y2],
        (Both, Both) => vec![Datum::X1X2, Datum::Y1Y2],
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn nine_choices_yield_data() {
        assert_eq!(MeasurementChoice::all().len(), 16);
        assert_eq!(MeasurementChoice::data_yielding().len(), 9);
        let pairs = MeasurementChoice::all()
            .into_iter()
            .filter(|c| admissible_data(*c).len() == 2)
            .count();
        assert_eq!(pairs, 4);
    }

    #[test]
    fn x1_with_bob_sequence() {
        let c = MeasurementChoice::new(LocalChoice::First, LocalChoice::Both);
        let d = admissible_data(c);
        assert_eq!(d, vec![Datum::X1Y1, Datum::Y1Y2]);
        assert!(!d.contains(&Datum::X1Y2));
    }

    #[test]
    fn nothing_measured() {
        assert!(admissible_data(MeasurementChoice::new(LocalChoice::None, LocalChoice::None)).is_empty());
    }

    #[test]
    fn union_covers_hybrid_terms() {
        let all: BTreeSet<Datum> = MeasurementChoice::all().into_iter().flat_map(admissible_data).collect();
        for d in Datum::ALL.into_iter().filter(|d| d.hybrid_coefficient() != 0) {
            assert!(all.contains(&d));
        }
    }

    #[test]
    fn text_round_trip() {
        for c in MeasurementChoice::all() {
            assert_eq!(c.to_string().parse::<MeasurementChoice>().unwrap(), c);
        }
        assert!("X3 -".parse::<MeasurementChoice>().is_err());
    }
}
