//! Transports, transcripts, the Monte Carlo runner and experiment plumbing.

pub mod experiment;
pub mod remote;
pub mod transcript;
pub mod transport;

pub use experiment::{monte_carlo, run_sessions, AggregateStats, ExperimentError, ExperimentSpec, OutputPaths, SessionOutcome};
pub use transcript::{first_divergence, replay, replay_file, ReplayReport, Transcript, TranscriptError, TranscriptHeader};
pub use remote::{merge_reports, run_remote, RemoteOutcome};
