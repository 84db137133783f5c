//! Running one party against a peer in another process over a byte stream.

use std::io::{Read, Write};

use super::transcript::Transcript;
use super::transport::StreamTransport;
use crate::adversary::Strategy;
use crate::protocol::rng::session_id;
use crate::protocol::{
    run_party, Alice, Bob, Channel, Party, PartyMachine, PartyReport, ProtocolConfig, SessionError, SessionResult,
};

/// What one side of a stream session ends with.
#[derive(Debug, Clone)]
pub struct RemoteOutcome {
    pub report: PartyReport,
    /// This party's log, headed by the shared configuration.
    pub transcript: Transcript,
}

/// Handshakes over `stream`, then plays `party` to completion. The strategy's
/// hooks for the other party are ignored.
pub fn run_remote<S: Read + Write>(
    party: Party,
    cfg: &ProtocolConfig,
    strategy: Strategy,
    stream: S,
) -> Result<RemoteOutcome, SessionError> {
    cfg.validate().map_err(crate::protocol::ProtocolError::from)?;
    let mut transport = StreamTransport::new(stream);
    transport.handshake(party, &cfg.digest())?;
    let mut channel = Channel::new(transport, party, session_id(cfg.seed));
    let (alice_hooks, bob_hooks) = strategy.hooks();
    let mut machine: Box<dyn PartyMachine> = match party {
        Party::Alice => Box::new(Alice::new(cfg.clone(), alice_hooks)?),
        Party::Bob => Box::new(Bob::new(cfg.clone(), bob_hooks)?),
    };
    let report = run_party(machine.as_mut(), &mut channel)?;
    let transcript = Transcript::new(cfg, strategy, channel.into_log(), None);
    Ok(RemoteOutcome { report, transcript })
}

/// Combines the two sides' reports the way an in-process session does.
pub fn merge_reports(session_id: &str, alice: &PartyReport, bob: &PartyReport) -> SessionResult {
    SessionResult::merge(session_id, alice, bob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::run_session;
    use std::net::{TcpListener, TcpStream};

    #[test]
    fn tcp_session_matches_loopback() {
        let cfg = ProtocolConfig { seed: 31, n_runs: 4000, ..Default::default() };
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let c = cfg.clone();
        let bob = std::thread::spawn(move || {
            let s = TcpStream::connect(addr).unwrap();
            run_remote(Party::Bob, &c, Strategy::Honest, s).unwrap()
        });
        let (s, _) = listener.accept().unwrap();
        let alice = run_remote(Party::Alice, &cfg, Strategy::Honest, s).unwrap();
        let bob = bob.join().unwrap();

        let (a, b) = Strategy::Honest.hooks();
        let local = run_session(&cfg, a, b).unwrap();
        let merged = merge_reports(&session_id(cfg.seed), &alice.report, &bob.report);
        assert_eq!(merged, local.result);
        assert_eq!(alice.transcript.messages, local.transcript);
        assert_eq!(bob.transcript.messages, local.transcript);
    }

    #[test]
    fn mismatched_configs_fail_handshake() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let bob = std::thread::spawn(move || {
            let s = TcpStream::connect(addr).unwrap();
            let cfg = ProtocolConfig { seed: 2, n_runs: 100, ..Default::default() };
            run_remote(Party::Bob, &cfg, Strategy::Honest, s)
        });
        let (s, _) = listener.accept().unwrap();
        let cfg = ProtocolConfig { seed: 1, n_runs: 100, ..Default::default() };
        assert!(matches!(run_remote(Party::Alice, &cfg, Strategy::Honest, s), Err(SessionError::Transport(_))));
        assert!(bob.join().unwrap().is_err());
    }
}
