//! Simulation and verification toolkit for all-or-nothing oblivious transfer
//! built on Hardy's two-qubit nonlocality argument.
//!
//! * [`qcore`]: two-qubit states, Born-rule tables and seeded sampling.
//! * [`stats`]: CH bound, visibility threshold and sample-size arithmetic.
//! * [`protocol`]: Alice and Bob state machines with every honesty check.
//! * [`adversary`]: cheating strategies and detection statistics.
//! * [`harness`]: transports, transcripts and the Monte Carlo runner.

pub mod qcore;
pub mod stats;
pub mod adversary;
pub mod protocol;
pub mod harness;
