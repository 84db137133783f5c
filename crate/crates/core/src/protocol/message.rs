use std::fmt;

use serde::{Deserialize, Serialize};

use crate::qcore::{LocalState, Outcome, Setting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn peer(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Alice => f.write_str("alice"),
            Party::Bob => f.write_str("bob"),
        }
    }
}

/// Protocol steps, including the audit sub-steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Step {
    S1,
    S2,
    S2a,
    S3,
    S3a,
    S4,
    S4a,
    S5,
    S5a,
    S6,
    S7,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortKind {
    /// A revealed tuple hit a Hardy-zero cell (or exceeded the noise budget).
    HardyViolation,
    /// Re-measuring a received qubit contradicted the sender's announced outcome.
    RemeasureMismatch,
    /// A list had an implausible size.
    FrequencyGate,
    /// A pair revealed in S4(a) does not have equal settings and opposite outcomes.
    PairConstraint,
    /// Bases revealed for a pair contradict the S5 classification.
    BasisConstraint,
    /// The noisy Hardy success cell fell below `q - 3 eps`.
    HardySuccess,
    /// No surviving pair encodes Alice's bit.
    NoQualifyingPair,
    /// The peer sent a message that does not fit the protocol.
    Malformed,
}

impl fmt::Display for AbortKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("serializes");
        f.write_str(s.as_str().unwrap_or("unknown"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbortReason {
    pub step: Step,
    pub kind: AbortKind,
    pub raised_by: Party,
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.step, self.kind)
    }
}

/// One revealed setting, with the outcome when the reveal includes it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevealEntry {
    pub run: usize,
    pub setting: Setting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairRef {
    pub pair_id: usize,
    pub i1: usize,
    pub i2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairBases {
    pub pair_id: usize,
    pub b1: Setting,
    pub b2: Setting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum Message {
    /// S1: Bob's halves of the source pairs.
    QubitBatch { qubits: Vec<LocalState> },
    /// S2: Alice's qubits after her measurements.
    MeasuredQubit { qubits: Vec<LocalState> },
    /// Audit query; `ids` are run indices in S2(a)/S3(a) and pair ids in S4(a)/S5(a).
    RevealRequest { step: Step, ids: Vec<usize> },
    Reveal { step: Step, entries: Vec<RevealEntry> },
    /// S3: Bob's `L+`.
    ListAnnouncement { runs: Vec<usize> },
    /// S4: Alice's `{R_i}`.
    PairList { pairs: Vec<PairRef> },
    /// S5: Bob's `{R'_i}` plus both bases of every other pair.
    PairSubset { selected: Vec<usize>, excluded: Vec<PairBases> },
    /// S6: the pair carrying the transferred bit.
    OtIndex { pair_id: usize },
    Abort { reason: AbortReason },
}

impl Message {
    /// The protocol step a message belongs to.
    pub fn step(&self) -> Step {
        match self {
            Message::QubitBatch { .. } => Step::S1,
            Message::MeasuredQubit { .. } => Step::S2,
            Message::RevealRequest { step, .. } | Message::Reveal { step, .. } => *step,
            Message::ListAnnouncement { .. } => Step::S3,
            Message::PairList { .. } => Step::S4,
            Message::PairSubset { .. } => Step::S5,
            Message::OtIndex { .. } => Step::S6,
            Message::Abort { reason } => reason.step,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::QubitBatch { .. } => "qubit_batch",
            Message::MeasuredQubit { .. } => "measured_qubit",
            Message::RevealRequest { .. } => "reveal_request",
            Message::Reveal { .. } => "reveal",
            Message::ListAnnouncement { .. } => "list_announcement",
            Message::PairList { .. } => "pair_list",
            Message::PairSubset { .. } => "pair_subset",
            Message::OtIndex { .. } => "ot_index",
            Message::Abort { .. } => "abort",
        }
    }
}

/// A message as it travels: `{seq, session_id, sender, type, payload}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    pub session_id: String,
    pub sender: Party,
    #[serde(flatten)]
    pub message: Message,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_wire_shape() {
        let env = Envelope {
            seq: 3,
            session_id: "ab".into(),
            sender: Party::Bob,
            message: Message::OtIndex { pair_id: 7 },
        };
        let v: serde_json::Value = serde_json::to_value(&env).unwrap();
        assert_eq!(v["seq"], 3);
        assert_eq!(v["sender"], "bob");
        assert_eq!(v["type"], "ot_index");
        assert_eq!(v["payload"]["pair_id"], 7);
        let back: Envelope = serde_json::from_value(v).unwrap();
        assert_eq!(back, env);
    }

    #[test]
    fn abort_reason_display() {
        let r = AbortReason {
            step: Step::S3a,
            kind: AbortKind::FrequencyGate,
            raised_by: Party::Alice,
        };
        assert_eq!(r.to_string(), "S3a/frequency_gate");
    }
}
