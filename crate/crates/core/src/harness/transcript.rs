//! JSONL transcripts: a header line with everything needed to re-run the
//! session, one line per message, and a closing result line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::Strategy;
use crate::protocol::rng::session_id;
use crate::protocol::{run_session, Envelope, ProtocolConfig, SessionError, SessionOutput, SessionResult};

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Schema { line: usize, source: serde_json::Error },
    #[error("transcript is empty")]
    Empty,
    #[error("header seed {header} does not match config seed {config}")]
    SeedMismatch { header: u64, config: u64 },
    #[error("session id {got} was not derived from seed {seed}")]
    SessionMismatch { seed: u64, got: String },
    #[error(transparent)]
    Session(#[from] SessionError),
}

/// First line of a transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub config: ProtocolConfig,
    pub strategy: Strategy,
    pub session_id: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ResultLine {
    result: SessionResult,
}

/// A recorded session.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub messages: Vec<Envelope>,
    pub result: Option<SessionResult>,
}

impl Transcript {
    pub fn new(cfg: &ProtocolConfig, strategy: Strategy, messages: Vec<Envelope>, result: Option<SessionResult>) -> Self {
        Self {
            header: TranscriptHeader {
                config: cfg.clone(),
                strategy,
                session_id: session_id(cfg.seed),
                seed: cfg.seed,
            },
            messages,
            result,
        }
    }

    /// Runs one loopback session and records Alice's view of it.
    pub fn record(cfg: &ProtocolConfig, strategy: Strategy) -> Result<(Self, SessionOutput), SessionError> {
        let (a, b) = strategy.hooks();
        let out = run_session(cfg, a, b)?;
        let t = Self::new(cfg, strategy, out.transcript.clone(), Some(out.result.clone()));
        Ok((t, out))
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for m in &self.messages {
            serde_json::to_writer(&mut w, m)?;
            w.write_all(b"\n")?;
        }
        if let Some(result) = &self.result {
            serde_json::to_writer(&mut w, &ResultLine { result: result.clone() })?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn read_jsonl<R: Read>(r: R) -> Result<Self, TranscriptError> {
        let mut lines = BufReader::new(r).lines().enumerate();
        let header = loop {
            let Some((i, line)) = lines.next() else {
                return Err(TranscriptError::Empty);
            };
            let line = line?;
            if !line.trim().is_empty() {
                break serde_json::from_str(&line).map_err(|source| TranscriptError::Schema { line: i + 1, source })?;
            }
        };
        let mut messages = Vec::new();
        let mut result = None;
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let schema = |source| TranscriptError::Schema { line: i + 1, source };
            let value: serde_json::Value = serde_json::from_str(&line).map_err(schema)?;
            if value.get("result").is_some() {
                let r: ResultLine = serde_json::from_value(value).map_err(schema)?;
                result = Some(r.result);
            } else {
                messages.push(serde_json::from_value(value).map_err(schema)?);
            }
        }
        Ok(Self { header, messages, result })
    }

    pub fn save(&self, path: &Path) -> Result<(), TranscriptError> {
        Ok(self.write_jsonl(BufWriter::new(File::create(path)?))?)
    }

    pub fn load(path: &Path) -> Result<Self, TranscriptError> {
        Self::read_jsonl(File::open(path)?)
    }
}

/// Outcome of re-executing a recorded session.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub result: SessionResult,
    /// Sequence number of the first message that differs, if any.
    pub first_divergence: Option<u64>,
    /// Whether the recorded result line, when present, equals the re-run.
    pub result_matches: bool,
}

impl ReplayReport {
    pub fn is_faithful(&self) -> bool {
        self.first_divergence.is_none() && self.result_matches
    }
}

/// Re-runs the session described by the header over loopback and compares it
/// with the recording message by message.
pub fn replay(t: &Transcript) -> Result<ReplayReport, TranscriptError> {
    let h = &t.header;
    if h.seed != h.config.seed {
        return Err(TranscriptError::SeedMismatch {
            header: h.seed,
            config: h.config.seed,
        });
    }
    if h.session_id != session_id(h.seed) {
        return Err(TranscriptError::SessionMismatch {
            seed: h.seed,
            got: h.session_id.clone(),
        });
    }
    let (fresh, _) = Transcript::record(&h.config, h.strategy)?;
    let first_divergence = first_divergence(&t.messages, &fresh.messages);
    let result = fresh.result.expect("recorded sessions carry a result");
    let result_matches = t.result.as_ref().is_none_or(|r| *r == result);
    Ok(ReplayReport {
        result,
        first_divergence,
        result_matches,
    })
}

/// Sequence number at which two logs first differ; a missing message counts as
/// a divergence at the position where it should have been.
pub fn first_divergence(recorded: &[Envelope], fresh: &[Envelope]) -> Option<u64> {
    if let Some((a, _)) = recorded.iter().zip(fresh).find(|(a, b)| a != b) {
        return Some(a.seq);
    }
    match recorded.len().cmp(&fresh.len()) {
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Less => Some(fresh[recorded.len()].seq),
        std::cmp::Ordering::Greater => Some(recorded[fresh.len()].seq),
    }
}

pub fn replay_file(path: &Path) -> Result<ReplayReport, TranscriptError> {
    replay(&Transcript::load(path)?)
}
