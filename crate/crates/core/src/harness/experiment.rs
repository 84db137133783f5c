//! Seeded Monte Carlo over many independent sessions.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::transcript::Transcript;
use crate::adversary::Strategy;
use crate::protocol::rng::session_seed;
use crate::protocol::{ProtocolConfig, SessionResult};
use crate::qcore::{ch_lhs, ProbTable};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("an experiment needs at least one session")]
    NoSessions,
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing outputs: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Config(#[from] crate::protocol::ConfigError),
}

/// Where a run writes its artifacts; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    /// Aggregate statistics as JSON.
    pub stats: Option<PathBuf>,
    /// One JSON line per session result.
    pub results: Option<PathBuf>,
    /// Directory receiving one `session-<index>.jsonl` transcript per session.
    pub transcripts: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// `config.seed` is the master seed.
    pub config: ProtocolConfig,
    pub sessions: usize,
    pub strategy: Strategy,
    /// Worker threads; 0 uses rayon's default.
    pub parallelism: usize,
    pub outputs: OutputPaths,
}

impl ExperimentSpec {
    pub fn new(config: ProtocolConfig, sessions: usize) -> Self {
        Self {
            config,
            sessions,
            strategy: Strategy::Honest,
            parallelism: 0,
            outputs: OutputPaths::default(),
        }
    }

    /// Config of session `index`: the master config with a derived seed.
    pub fn session_config(&self, index: usize) -> ProtocolConfig {
        ProtocolConfig {
            seed: session_seed(self.config.seed, index as u64),
            ..self.config.clone()
        }
    }
}

/// A session either produced a result or failed outside the protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SessionOutcome {
    Finished(SessionResult),
    Failed(String),
}

/// Summary of a batch of sessions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateStats {
    pub sessions: usize,
    pub completed: usize,
    /// Completed sessions where Bob decoded.
    pub decoded: usize,
    /// `decoded / completed`.
    pub decode_rate: f64,
    pub decode_stderr: f64,
    /// Decodes that disagree with Alice's bit.
    pub wrong_decodes: usize,
    /// Aborts keyed by `step/kind`; sessions that failed outright appear as `error`.
    pub aborts: BTreeMap<String, usize>,
    pub abort_rate: BTreeMap<String, f64>,
    pub mean_lplus_fraction: Option<f64>,
    pub mean_rprime_fraction: Option<f64>,
    /// CH left-hand side of the pooled S2(a) counts.
    pub ch_lhs: Option<f64>,
    /// Excluded from equality: the only field that depends on the machine.
    pub wall_clock_secs: f64,
}

impl PartialEq for AggregateStats {
    fn eq(&self, o: &Self) -> bool {
        self.sessions == o.sessions
            && self.completed == o.completed
            && self.decoded == o.decoded
            && self.decode_rate == o.decode_rate
            && self.decode_stderr == o.decode_stderr
            && self.wrong_decodes == o.wrong_decodes
            && self.aborts == o.aborts
            && self.abort_rate == o.abort_rate
            && self.mean_lplus_fraction == o.mean_lplus_fraction
            && self.mean_rprime_fraction == o.mean_rprime_fraction
            && self.ch_lhs == o.ch_lhs
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl AggregateStats {
    /// Folds outcomes in session order, so the result is independent of how
    /// they were computed.
    pub fn from_outcomes(outcomes: &[SessionOutcome], wall_clock_secs: f64) -> Self {
        let results: Vec<&SessionResult> = outcomes
            .iter()
            .filter_map(|o| match o {
                SessionOutcome::Finished(r) => Some(r),
                SessionOutcome::Failed(_) => None,
            })
            .collect();
        let mut aborts = BTreeMap::new();
        for o in outcomes {
            let key = match o {
                SessionOutcome::Finished(r) => r.abort.map(|a| a.to_string()),
                SessionOutcome::Failed(_) => Some("error".to_string()),
            };
            if let Some(k) = key {
                *aborts.entry(k).or_insert(0) += 1;
            }
        }
        let sessions = outcomes.len();
        let abort_rate = aborts
            .iter()
            .map(|(k, &v)| (k.clone(), v as f64 / sessions.max(1) as f64))
            .collect();
        let completed: Vec<&&SessionResult> = results.iter().filter(|r| r.completed()).collect();
        let decoded = completed.iter().filter(|r| r.bob_decoded.is_some()).count();
        let wrong_decodes = completed
            .iter()
            .filter(|r| r.bob_decoded.is_some_and(|b| b != r.alice_bit))
            .count();
        let decode_rate = if completed.is_empty() {
            0.0
        } else {
            decoded as f64 / completed.len() as f64
        };
        let decode_stderr = if completed.is_empty() {
            0.0
        } else {
            (decode_rate * (1.0 - decode_rate) / completed.len() as f64).sqrt()
        };
        let mut pooled = [[0u64; 4]; 4];
        for r in &results {
            for (row, other) in pooled.iter_mut().zip(&r.s2a_counts) {
                for (x, y) in row.iter_mut().zip(other) {
                    *x += y;
                }
            }
        }
        Self {
            sessions,
            completed: completed.len(),
            decoded,
            decode_rate,
            decode_stderr,
            wrong_decodes,
            aborts,
            abort_rate,
            mean_lplus_fraction: mean(results.iter().filter_map(|r| r.counters.lplus_fraction())),
            mean_rprime_fraction: mean(results.iter().filter_map(|r| r.counters.rprime_fraction())),
            ch_lhs: ProbTable::from_counts(&pooled).map(|t| ch_lhs(&t)),
            wall_clock_secs,
        }
    }

    /// Total abort rate over all reasons.
    pub fn total_abort_rate(&self) -> f64 {
        self.abort_rate.values().sum()
    }
}

fn run_one(spec: &ExperimentSpec, index: usize) -> Result<SessionOutcome, std::io::Error> {
    let cfg = spec.session_config(index);
    match Transcript::record(&cfg, spec.strategy) {
        Ok((t, out)) => {
            if let Some(dir) = &spec.outputs.transcripts {
                t.write_jsonl(BufWriter::new(File::create(dir.join(format!("session-{index}.jsonl")))?))?;
            }
            Ok(SessionOutcome::Finished(out.result))
        }
        Err(e) => Ok(SessionOutcome::Failed(e.to_string())),
    }
}

/// Runs every session of `spec`, in parallel, and returns them in index order.
pub fn run_sessions(spec: &ExperimentSpec) -> Result<Vec<SessionOutcome>, ExperimentError> {
    if spec.sessions == 0 {
        return Err(ExperimentError::NoSessions);
    }
    spec.config.validate()?;
    if let Some(dir) = &spec.outputs.transcripts {
        std::fs::create_dir_all(dir)?;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(spec.parallelism).build()?;
    let outcomes = pool.install(|| {
        (0..spec.sessions)
            .into_par_iter()
            .map(|i| run_one(spec, i))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(outcomes)
}

/// Runs the experiment, writes the requested outputs and summarizes it.
pub fn monte_carlo(spec: &ExperimentSpec) -> Result<AggregateStats, ExperimentError> {
    let start = Instant::now();
    let outcomes = run_sessions(spec)?;
    let stats = AggregateStats::from_outcomes(&outcomes, start.elapsed().as_secs_f64());
    if let Some(path) = &spec.outputs.results {
        let mut w = BufWriter::new(File::create(path)?);
        for o in &outcomes {
            serde_json::to_writer(&mut w, o)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    if let Some(path) = &spec.outputs.stats {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &stats)?;
        w.flush()?;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(parallelism: usize) -> ExperimentSpec {
        ExperimentSpec {
            parallelism,
            ..ExperimentSpec::new(ProtocolConfig { seed: 77, n_runs: 4000, ..Default::default() }, 12)
        }
    }

    #[test]
    fn parallelism_does_not_change_stats() {
        let a = monte_carlo(&spec(1)).unwrap();
        let b = monte_carlo(&spec(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sessions, 12);
        assert!((0.0..=1.0).contains(&a.decode_rate));
    }

    #[test]
    fn session_seeds_are_distinct() {
        let s = spec(1);
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| s.session_config(i).seed).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn zero_sessions_rejected() {
        let mut s = spec(1);
        s.sessions = 0;
        assert!(matches!(monte_carlo(&s), Err(ExperimentError::NoSessions)));
    }

    #[test]
    fn writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = spec(2);
        s.sessions = 3;
        s.outputs = OutputPaths {
            stats: Some(dir.path().join("stats.json")),
            results: Some(dir.path().join("results.jsonl")),
            transcripts: Some(dir.path().join("t")),
        };
        monte_carlo(&s).unwrap();
        let results = std::fs::read_to_string(dir.path().join("results.jsonl")).unwrap();
        assert_eq!(results.lines().count(), 3);
        assert!(dir.path().join("t/session-2.jsonl").exists());
        let back: AggregateStats =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
        assert_eq!(back.sessions, 3);
    }
}
