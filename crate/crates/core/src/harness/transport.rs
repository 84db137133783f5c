//! Message transports: an in-process queue pair and length-prefixed JSON frames
//! over any byte stream.

use std::io::{self, Read, Write};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{Envelope, Party};

/// Version carried in the stream handshake.
pub const PROTOCOL_VERSION: u32 = 1;

/// Frames larger than this are rejected before allocation.
pub const MAX_FRAME_LEN: usize = 64 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("peer closed the connection")]
    Closed,
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("frame of {0} bytes exceeds the limit")]
    FrameTooLarge(usize),
    #[error("malformed frame: {0}")]
    Json(#[from] serde_json::Error),
    #[error("handshake failed: {0}")]
    Handshake(String),
}

/// Ordered, exactly-once delivery of envelopes in each direction.
pub trait Transport {
    fn send(&mut self, env: &Envelope) -> Result<(), TransportError>;
    /// Blocks until the next envelope arrives.
    fn recv(&mut self) -> Result<Envelope, TransportError>;
}

impl<T: Transport + ?Sized> Transport for &mut T {
    fn send(&mut self, env: &Envelope) -> Result<(), TransportError> {
        (**self).send(env)
    }

    fn recv(&mut self) -> Result<Envelope, TransportError> {
        (**self).recv()
    }
}

/// One end of an in-process queue pair.
#[derive(Debug)]
pub struct Loopback {
    tx: mpsc::Sender<Envelope>,
    rx: mpsc::Receiver<Envelope>,
}

pub fn loopback_pair() -> (Loopback, Loopback) {
    let (tx_a, rx_b) = mpsc::channel();
    let (tx_b, rx_a) = mpsc::channel();
    (Loopback { tx: tx_a, rx: rx_a }, Loopback { tx: tx_b, rx: rx_b })
}

impl Loopback {
    /// Next envelope if one is already queued.
    pub fn try_recv(&mut self) -> Result<Option<Envelope>, TransportError> {
        match self.rx.try_recv() {
            Ok(env) => Ok(Some(env)),
            Err(mpsc::TryRecvError::Empty) => Ok(None),
            Err(mpsc::TryRecvError::Disconnected) => Err(TransportError::Closed),
        }
    }
}

impl Transport for Loopback {
    fn send(&mut self, env: &Envelope) -> Result<(), TransportError> {
        self.tx.send(env.clone()).map_err(|_| TransportError::Closed)
    }

    fn recv(&mut self) -> Result<Envelope, TransportError> {
        self.rx.recv().map_err(|_| TransportError::Closed)
    }
}

/// Writes `len (u32, big endian) || payload`.
pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> Result<(), TransportError> {
    if payload.len() > MAX_FRAME_LEN {
        return Err(TransportError::FrameTooLarge(payload.len()));
    }
    w.write_all(&(payload.len() as u32).to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()?;
    Ok(())
}

pub fn read_frame<R: Read>(r: &mut R) -> Result<Vec<u8>, TransportError> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Err(TransportError::Closed),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_LEN {
        return Err(TransportError::FrameTooLarge(len));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn encode_envelope(env: &Envelope) -> Result<Vec<u8>, TransportError> {
    Ok(serde_json::to_vec(env)?)
}

pub fn decode_envelope(bytes: &[u8]) -> Result<Envelope, TransportError> {
    Ok(serde_json::from_slice(bytes)?)
}

/// First frame in each direction of a stream session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol_version: u32,
    pub config_digest: String,
    pub party: Party,
}

/// Length-prefixed JSON frames over a connected byte stream.
#[derive(Debug)]
pub struct StreamTransport<S> {
    stream: S,
}

impl<S: Read + Write> StreamTransport<S> {
    pub fn new(stream: S) -> Self {
        Self { stream }
    }

    /// Exchanges handshakes; the peer must run the same protocol version with
    /// an identical configuration and play the other role.
    pub fn handshake(&mut self, me: Party, config_digest: &str) -> Result<Handshake, TransportError> {
        let mine = Handshake {
            protocol_version: PROTOCOL_VERSION,
            config_digest: config_digest.to_string(),
            party: me,
        };
        write_frame(&mut self.stream, &serde_json::to_vec(&mine)?)?;
        let theirs: Handshake = serde_json::from_slice(&read_frame(&mut self.stream)?)?;
        if theirs.protocol_version != PROTOCOL_VERSION {
            return Err(TransportError::Handshake(format!(
                "protocol version {} != {PROTOCOL_VERSION}",
                theirs.protocol_version
            )));
        }
        if theirs.config_digest != config_digest {
            return Err(TransportError::Handshake("configuration digests differ".into()));
        }
        if theirs.party != me.peer() {
            return Err(TransportError::Handshake(format!("peer also claims to be {me}")));
        }
        Ok(theirs)
    }

    pub fn into_inner(self) -> S {
        self.stream
    }
}

impl<S: Read + Write> Transport for StreamTransport<S> {
    fn send(&mut self, env: &Envelope) -> Result<(), TransportError> {
        write_frame(&mut self.stream, &encode_envelope(env)?)
    }

    fn recv(&mut self) -> Result<Envelope, TransportError> {
        decode_envelope(&read_frame(&mut self.stream)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Message;
    use std::io::Cursor;

    fn env(seq: u64) -> Envelope {
        Envelope {
            seq,
            session_id: "s".into(),
            sender: Party::Alice,
            message: Message::OtIndex { pair_id: seq as usize },
        }
    }

    #[test]
    fn frame_layout() {
        let mut buf = Vec::new();
        write_frame(&mut buf, b"{}").unwrap();
        assert_eq!(buf, vec![0, 0, 0, 2, b'{', b'}']);
        let mut r = Cursor::new(buf);
        assert_eq!(read_frame(&mut r).unwrap(), b"{}");
        assert!(matches!(read_frame(&mut r), Err(TransportError::Closed)));
    }

    #[test]
    fn oversized_frame_rejected() {
        let mut r = Cursor::new(u32::MAX.to_be_bytes().to_vec());
        assert!(matches!(read_frame(&mut r), Err(TransportError::FrameTooLarge(_))));
    }

    #[test]
    fn loopback_fifo() {
        let (mut a, mut b) = loopback_pair();
        for i in 0..10 {
            a.send(&env(i)).unwrap();
        }
        for i in 0..10 {
            assert_eq!(b.recv().unwrap().seq, i);
        }
        assert!(b.try_recv().unwrap().is_none());
        drop(a);
        assert!(matches!(b.recv(), Err(TransportError::Closed)));
    }

    #[test]
    fn stream_round_trip() {
        let mut wire = Vec::new();
        {
            let mut t = StreamTransport::new(Cursor::new(&mut wire));
            t.send(&env(1)).unwrap();
            t.send(&env(2)).unwrap();
        }
        let mut t = StreamTransport::new(Cursor::new(wire));
        assert_eq!(t.recv().unwrap(), env(1));
        assert_eq!(t.recv().unwrap(), env(2));
    }
}
