//! Running the two machines against each other over a transport.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::alice::{Alice, AliceHooks};
use super::bob::{Bob, BobHooks};
use super::config::ProtocolConfig;
use super::message::{AbortReason, Envelope, Message, Party};
use super::party::{CheckRecord, Counters, PartyMachine, PartyReport};
use super::rng::session_id;
use super::steps::RunRecord;
use super::ProtocolError;
use crate::harness::transport::{loopback_pair, Loopback, Transport, TransportError};

/// Failures that are not protocol aborts.
#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Setup(#[from] ProtocolError),
    #[error("transport failure: {0}")]
    Transport(#[from] TransportError),
    #[error("received message out of order: seq {seq} after {last}")]
    OutOfOrder { seq: u64, last: u64 },
    #[error("message for session {got}, expected {expected}")]
    WrongSession { expected: String, got: String },
    #[error("message claims to come from {0}")]
    WrongSender(Party),
    #[error("session stalled before both parties finished")]
    Stalled,
}

/// Outcome of one session, merged from both parties' reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub session_id: String,
    pub alice_bit: u8,
    pub bob_decoded: Option<u8>,
    pub abort: Option<AbortReason>,
    pub counters: Counters,
    pub checks: Vec<CheckRecord>,
    pub s2a_counts: [[u64; 4]; 4],
}

impl SessionResult {
    pub fn merge(session_id: &str, alice: &PartyReport, bob: &PartyReport) -> Self {
        let mut s2a_counts = alice.s2a_counts;
        for (row, other) in s2a_counts.iter_mut().zip(&bob.s2a_counts) {
            for (x, y) in row.iter_mut().zip(other) {
                *x += y;
            }
        }
        Self {
            session_id: session_id.to_string(),
            alice_bit: alice.alice_bit.unwrap_or(0),
            bob_decoded: bob.bob_decoded,
            abort: alice.abort.or(bob.abort),
            counters: alice.counters.merge(&bob.counters),
            checks: alice.checks.iter().chain(&bob.checks).copied().collect(),
            s2a_counts,
        }
    }

    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }
}

/// One party's end of a session: stamps outgoing envelopes, validates incoming
/// ones and logs both.
pub struct Channel<T> {
    transport: T,
    party: Party,
    session_id: String,
    clock: u64,
    last_seen: u64,
    log: Vec<Envelope>,
}

impl<T: Transport> Channel<T> {
    pub fn new(transport: T, party: Party, session_id: impl Into<String>) -> Self {
        Self {
            transport,
            party,
            session_id: session_id.into(),
            clock: 0,
            last_seen: 0,
            log: Vec::new(),
        }
    }

    pub fn send(&mut self, message: Message) -> Result<(), SessionError> {
        self.clock += 1;
        let env = Envelope {
            seq: self.clock,
            session_id: self.session_id.clone(),
            sender: self.party,
            message,
        };
        self.transport.send(&env)?;
        self.log.push(env);
        Ok(())
    }

    /// Validates and logs an incoming envelope, returning its message.
    pub fn accept(&mut self, env: Envelope) -> Result<Message, SessionError> {
        if env.session_id != self.session_id {
            return Err(SessionError::WrongSession {
                expected: self.session_id.clone(),
                got: env.session_id,
            });
        }
        if env.sender != self.party.peer() {
            return Err(SessionError::WrongSender(env.sender));
        }
        if env.seq <= self.last_seen {
            return Err(SessionError::OutOfOrder { seq: env.seq, last: self.last_seen });
        }
        self.last_seen = env.seq;
        self.clock = self.clock.max(env.seq);
        let message = env.message.clone();
        self.log.push(env);
        Ok(message)
    }

    pub fn recv(&mut self) -> Result<Message, SessionError> {
        let env = self.transport.recv()?;
        self.accept(env)
    }

    pub fn log(&self) -> &[Envelope] {
        &self.log
    }

    pub fn into_log(self) -> Vec<Envelope> {
        self.log
    }

    pub fn transport_mut(&mut self) -> &mut T {
        &mut self.transport
    }
}

/// Drives one machine until it finishes, blocking on the transport.
pub fn run_party<T: Transport, M: PartyMachine + ?Sized>(
    machine: &mut M,
    channel: &mut Channel<T>,
) -> Result<PartyReport, SessionError> {
    for m in machine.start() {
        channel.send(m)?;
    }
    while !machine.is_done() {
        let msg = channel.recv()?;
        for m in machine.handle(msg) {
            channel.send(m)?;
        }
    }
    Ok(machine.report())
}

/// Everything produced by an in-process session.
#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub result: SessionResult,
    /// Alice's log; identical to Bob's for every well-formed exchange.
    pub transcript: Vec<Envelope>,
    pub bob_transcript: Vec<Envelope>,
    /// Both parties' private records, run by run.
    pub records: Vec<RunRecord>,
}

fn pump(machine: &mut dyn PartyMachine, ch: &mut Channel<Loopback>) -> Result<bool, SessionError> {
    let mut progressed = false;
    while let Some(env) = ch.transport_mut().try_recv()? {
        progressed = true;
        let msg = ch.accept(env)?;
        for m in machine.handle(msg) {
            ch.send(m)?;
        }
    }
    Ok(progressed)
}

/// Runs both parties in the current thread over a loopback queue pair.
pub fn run_session(
    cfg: &ProtocolConfig,
    alice_hooks: Box<dyn AliceHooks>,
    bob_hooks: Box<dyn BobHooks>,
) -> Result<SessionOutput, SessionError> {
    let alice = Alice::new(cfg.clone(), alice_hooks)?;
    let bob = Bob::new(cfg.clone(), bob_hooks)?;
    run_machines(cfg, alice, bob)
}

/// Like [`run_session`] but with pre-built machines.
pub fn run_machines(cfg: &ProtocolConfig, mut alice: Alice, mut bob: Bob) -> Result<SessionOutput, SessionError> {
    let sid = session_id(cfg.seed);
    let (ta, tb) = loopback_pair();
    let mut ca = Channel::new(ta, Party::Alice, sid.clone());
    let mut cb = Channel::new(tb, Party::Bob, sid.clone());
    for m in alice.start() {
        ca.send(m)?;
    }
    for m in bob.start() {
        cb.send(m)?;
    }
    loop {
        let b = pump(&mut bob, &mut cb)?;
        let a = pump(&mut alice, &mut ca)?;
        if alice.is_done() && bob.is_done() && !a && !b {
            break;
        }
        if !a && !b {
            return Err(SessionError::Stalled);
        }
    }
    let result = SessionResult::merge(&sid, &alice.report(), &bob.report());
    let records = alice
        .runs()
        .iter()
        .zip(bob.runs())
        .enumerate()
        .map(|(index, (a, b))| RunRecord {
            index,
            alice_setting: a.setting,
            alice_outcome: a.outcome,
            bob_setting: b.setting,
            bob_outcome: b.outcome,
            alice_qubit: b.alice_qubit,
            revealed: a.revealed || b.revealed,
            consumed: a.consumed || b.consumed,
        })
        .collect();
    Ok(SessionOutput {
        result,
        transcript: ca.into_log(),
        bob_transcript: cb.into_log(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{HonestAlice, HonestBob, Step};
    use crate::qcore::Outcome;

    fn honest(cfg: &ProtocolConfig) -> SessionOutput {
        run_session(cfg, Box::new(HonestAlice), Box::new(HonestBob)).unwrap()
    }

    #[test]
    fn honest_session_completes() {
        let cfg = ProtocolConfig { seed: 11, ..Default::default() };
        let out = honest(&cfg);
        assert!(out.result.completed(), "{:?}", out.result.abort);
        assert_eq!(out.transcript, out.bob_transcript);
        assert!(out.transcript.windows(2).all(|w| w[0].seq < w[1].seq));
        let last = out.transcript.last().unwrap();
        assert!(matches!(last.message, Message::OtIndex { .. }));
        assert_eq!(last.sender, Party::Alice);
        if let Some(b) = out.result.bob_decoded {
            assert_eq!(b, out.result.alice_bit);
        }
        assert!(out.result.checks.iter().all(|c| c.passed));
        let c = out.result.counters;
        assert!(c.l_plus > 0 && c.pairs > 0 && c.r_prime > 0);
    }

    #[test]
    fn same_seed_same_transcript() {
        let cfg = ProtocolConfig { seed: 3, n_runs: 4000, ..Default::default() };
        assert_eq!(honest(&cfg).transcript, honest(&cfg).transcript);
        let other = ProtocolConfig { seed: 4, ..cfg.clone() };
        assert_ne!(honest(&cfg).transcript, honest(&other).transcript);
    }

    #[test]
    fn selected_pairs_have_plus_member_in_alice_basis() {
        let cfg = ProtocolConfig { seed: 5, ..Default::default() };
        let out = honest(&cfg);
        let pairs = out.transcript.iter().find_map(|e| match &e.message {
            Message::PairList { pairs } => Some(pairs.clone()),
            _ => None,
        });
        let selected = out.transcript.iter().find_map(|e| match &e.message {
            Message::PairSubset { selected, .. } => Some(selected.clone()),
            _ => None,
        });
        let (pairs, selected) = (pairs.unwrap(), selected.unwrap());
        assert!(!selected.is_empty());
        for id in selected {
            let p = pairs[id];
            for i in [p.i1, p.i2] {
                let r = out.records[i];
                if r.alice_outcome == Outcome::Plus {
                    assert_eq!(r.bob_setting, r.alice_setting);
                } else {
                    assert_eq!(r.bob_setting, r.alice_setting.complement());
                }
            }
        }
    }

    #[test]
    fn tiny_session_reports_no_pair() {
        let cfg = ProtocolConfig { seed: 1, n_runs: 10, bit: Some(0), ..Default::default() };
        let out = honest(&cfg);
        let abort = out.result.abort.expect("too few runs to pair");
        assert_eq!(abort.raised_by, Party::Alice);
        assert!(matches!(abort.step, Step::S6 | Step::S3a | Step::S5a), "{abort}");
    }
}
