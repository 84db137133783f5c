use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{AliceHooks, BobHooks, HonestAlice, HonestBob, Party, Step};

use super::behaviors::{BadSource, FakeRPrime, FalsePairs, FilterLPlus, PadLPlus, PremeasureFilter};

/// Source Alice substitutes for the Hardy state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SourceKind {
    /// `|u>|u>`.
    Product,
    /// A maximally entangled pair.
    AncillaEntangled,
    /// The Hardy state for a different `alpha^2`, measured in the configured bases.
    WrongAlpha(f64),
}

/// Every party behavior the experiments can select.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    Honest,
    /// Adds `n_lies` runs with `b = -1` to `L+`.
    BobPadLPlus { n_lies: usize },
    /// Announces only runs whose Alice qubit shows `(U,-)` with `B = D` or `(D,-)` with `B = U`.
    BobFilterLPlus,
    /// Measures Alice's qubits of every `R'` pair and keeps only pairs showing a `-1`.
    BobPremeasureFilter,
    /// Adds `n_lies` equal-basis pairs to `R'`.
    BobFakeRPrime { n_lies: usize },
    /// Adds `n_lies` pairs violating the pairing constraints.
    AliceFalsePairs { n_lies: usize },
    AliceBadSource(SourceKind),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown strategy `{0}`; expected honest, pad-lplus:N, filter-lplus, premeasure-filter, fake-rprime:N, false-pairs:N or bad-source:product|ancilla|wrong-alpha=A2")]
pub struct ParseStrategyError(pub String);

impl Strategy {
    /// The deviating party, `None` for the honest pair.
    pub fn party(&self) -> Option<Party> {
        match self {
            Strategy::Honest => None,
            Strategy::BobPadLPlus { .. }
            | Strategy::BobFilterLPlus
            | Strategy::BobPremeasureFilter
            | Strategy::BobFakeRPrime { .. } => Some(Party::Bob),
            Strategy::AliceFalsePairs { .. } | Strategy::AliceBadSource(_) => Some(Party::Alice),
        }
    }

    /// Steps whose aborts count as catching this strategy.
    pub fn target_steps(&self) -> &'static [Step] {
        match self {
            Strategy::Honest => &[],
            Strategy::BobPadLPlus { .. } => &[Step::S3a, Step::S5a],
            Strategy::BobFilterLPlus => &[Step::S3a],
            Strategy::BobPremeasureFilter | Strategy::BobFakeRPrime { .. } => &[Step::S5a],
            Strategy::AliceFalsePairs { .. } => &[Step::S4a],
            Strategy::AliceBadSource(_) => &[Step::S2a, Step::S4a],
        }
    }

    /// Hooks for both parties; the non-deviating side is honest.
    pub fn hooks(&self) -> (Box<dyn AliceHooks>, Box<dyn BobHooks>) {
        let honest_a: Box<dyn AliceHooks> = Box::new(HonestAlice);
        let honest_b: Box<dyn BobHooks> = Box::new(HonestBob);
        match *self {
            Strategy::Honest => (honest_a, honest_b),
            Strategy::BobPadLPlus { n_lies } => (honest_a, Box::new(PadLPlus::new(n_lies))),
            Strategy::BobFilterLPlus => (honest_a, Box::new(FilterLPlus)),
            Strategy::BobPremeasureFilter => (honest_a, Box::new(PremeasureFilter)),
            Strategy::BobFakeRPrime { n_lies } => (honest_a, Box::new(FakeRPrime::new(n_lies))),
            Strategy::AliceFalsePairs { n_lies } => (Box::new(FalsePairs::new(n_lies)), honest_b),
            Strategy::AliceBadSource(kind) => (Box::new(BadSource(kind)), honest_b),
        }
    }
}

/// Attaches a strategy to the session: returns the hooks Alice and Bob run with.
pub fn apply_strategy(strategy: &Strategy) -> (Box<dyn AliceHooks>, Box<dyn BobHooks>) {
    strategy.hooks()
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Honest => f.write_str("honest"),
            Strategy::BobPadLPlus { n_lies } => write!(f, "pad-lplus:{n_lies}"),
            Strategy::BobFilterLPlus => f.write_str("filter-lplus"),
            Strategy::BobPremeasureFilter => f.write_str("premeasure-filter"),
            Strategy::BobFakeRPrime { n_lies } => write!(f, "fake-rprime:{n_lies}"),
            Strategy::AliceFalsePairs { n_lies } => write!(f, "false-pairs:{n_lies}"),
            Strategy::AliceBadSource(SourceKind::Product) => f.write_str("bad-source:product"),
            Strategy::AliceBadSource(SourceKind::AncillaEntangled) => f.write_str("bad-source:ancilla"),
            Strategy::AliceBadSource(SourceKind::WrongAlpha(a2)) => write!(f, "bad-source:wrong-alpha={a2}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = ParseStrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseStrategyError(s.to_string());
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let count = |a: Option<&str>| a.ok_or_else(err)?.parse::<usize>().map_err(|_| err());
        Ok(match name {
            "honest" if arg.is_none() => Strategy::Honest,
            "pad-lplus" => Strategy::BobPadLPlus { n_lies: count(arg)? },
            "filter-lplus" if arg.is_none() => Strategy::BobFilterLPlus,
            "premeasure-filter" if arg.is_none() => Strategy::BobPremeasureFilter,
            "fake-rprime" => Strategy::BobFakeRPrime { n_lies: count(arg)? },
            "false-pairs" => Strategy::AliceFalsePairs { n_lies: count(arg)? },
            "bad-source" => Strategy::AliceBadSource(match arg.ok_or_else(err)? {
                "product" => SourceKind::Product,
                "ancilla" => SourceKind::AncillaEntangled,
                other => {
                    let a2 = other.strip_prefix("wrong-alpha=").ok_or_else(err)?;
                    let a2: f64 = a2.parse().map_err(|_| err())?;
                    if !(a2 > 0.0 && a2 < 1.0) {
                        return Err(err());
                    }
                    SourceKind::WrongAlpha(a2)
                }
            }),
            _ => return Err(err()),
        })
    }
}

impl TryFrom<String> for Strategy {
    type Error = ParseStrategyError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> Self {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_strings() {
        for s in [
            "honest",
            "pad-lplus:50",
            "filter-lplus",
            "premeasure-filter",
            "fake-rprime:20",
            "false-pairs:20",
            "bad-source:product",
            "bad-source:ancilla",
            "bad-source:wrong-alpha=0.5",
        ] {
            let parsed: Strategy = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
            let json = serde_json::to_string(&parsed).unwrap();
            assert_eq!(serde_json::from_str::<Strategy>(&json).unwrap(), parsed);
        }
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "pad-lplus", "pad-lplus:x", "honest:1", "bad-source:wrong-alpha=1.5", "nope"] {
            assert!(s.parse::<Strategy>().is_err(), "{s}");
        }
    }

    #[test]
    fn parties_and_targets() {
        assert_eq!(Strategy::Honest.party(), None);
        assert_eq!(Strategy::BobFilterLPlus.party(), Some(Party::Bob));
        assert_eq!(Strategy::AliceFalsePairs { n_lies: 1 }.target_steps(), &[Step::S4a]);
    }
}
