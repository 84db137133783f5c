//! The two parties of the oblivious-transfer protocol as message-driven state
//! machines, with every honesty check of the audit sub-steps.
//!
//! Alice measures her halves, sends Bob his halves and then her measured
//! qubits; both audit a sample of runs against the Hardy zeros; Bob announces
//! his `+1` runs; Alice pairs them into same-setting, opposite-outcome pairs;
//! Bob keeps the pairs he measured in different bases; Alice names one pair
//! whose setting encodes her bit; Bob decodes it with probability `alpha^2`.

mod alice;
mod bob;
pub mod checks;
mod config;
pub mod expect;
mod message;
mod party;
pub mod rng;
mod session;
mod source;
pub mod steps;

use thiserror::Error;

pub use alice::{honest_source, Alice, AliceHooks, HonestAlice};
pub use bob::{Bob, BobHooks, HonestBob};
pub use checks::{cross_check, frequency_gate, GateError, RevealedTuple, Violation, ViolationKind};
pub use config::{ConfigError, Encoding, ProtocolConfig};
pub use expect::Expectations;
pub use message::{AbortKind, AbortReason, Envelope, Message, PairBases, PairRef, Party, RevealEntry, Step};
pub use party::{CheckRecord, Counters, PartyMachine, PartyReport};
pub use session::{run_machines, run_party, run_session, Channel, SessionError, SessionOutput, SessionResult};
pub use source::{Branch, PreparedRun, SourceModel};
pub use steps::{make_pairs, s3_offer, s5_refine, s6_encode, s7_decode, AliceRun, BobRun, Refinement, RunRecord};

use crate::qcore::QuantumError;

/// A session could not be set up.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}
