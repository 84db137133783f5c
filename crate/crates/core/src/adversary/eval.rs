//! Monte Carlo estimate of how often the honest party catches a strategy.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::strategy::Strategy;
use crate::protocol::rng::session_seed;
use crate::protocol::{run_session, ProtocolConfig, SessionError, SessionResult};

/// Detection statistics for one strategy over independent sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub strategy: Strategy,
    pub trials: usize,
    /// Sessions aborted by the honest party at one of the strategy's target steps.
    pub detected: usize,
    pub detection_rate: f64,
    /// Aborts that do not count as detection (wrong step, or no qualifying pair).
    pub other_aborts: usize,
    /// Detections keyed by `step/kind`.
    pub detecting_step: BTreeMap<String, usize>,
}

impl DetectionReport {
    /// Folds per-session results, in order, into a report.
    pub fn from_results(strategy: Strategy, results: &[SessionResult]) -> Self {
        let cheater = strategy.party();
        let mut detected = 0;
        let mut other_aborts = 0;
        let mut detecting_step = BTreeMap::new();
        for r in results {
            let Some(abort) = r.abort else { continue };
            let caught = cheater.is_some_and(|c| abort.raised_by != c) && strategy.target_steps().contains(&abort.step);
            if caught {
                detected += 1;
                *detecting_step.entry(abort.to_string()).or_insert(0) += 1;
            } else {
                other_aborts += 1;
            }
        }
        let trials = results.len();
        Self {
            strategy,
            trials,
            detected,
            detection_rate: if trials > 0 { detected as f64 / trials as f64 } else { 0.0 },
            other_aborts,
            detecting_step,
        }
    }

    /// Binomial standard error of the detection rate.
    pub fn stderr(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.detection_rate;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn write_json<W: Write>(&self, w: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(w, self)
    }

    /// Writes a header and one row per report.
    pub fn write_csv<W: Write>(reports: &[DetectionReport], w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["strategy", "trials", "rate", "detected", "stderr", "other_aborts", "steps"])?;
        for r in reports {
            let steps: Vec<String> = r.detecting_step.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.write_record([
                r.strategy.to_string(),
                r.trials.to_string(),
                format!("{:.6}", r.detection_rate),
                r.detected.to_string(),
                format!("{:.6}", r.stderr()),
                r.other_aborts.to_string(),
                steps.join(";"),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs `trials` sessions of `strategy`; session `i` is seeded from
/// `(cfg.seed, i)`, so the result does not depend on the thread pool.
pub fn detection_rate(strategy: Strategy, cfg: &ProtocolConfig, trials: usize) -> Result<DetectionReport, SessionError> {
    let results = (0..trials)
        .into_par_iter()
        .map(|i| {
            let cfg = ProtocolConfig {
                seed: session_seed(cfg.seed, i as u64),
                ..cfg.clone()
            };
            let (a, b) = strategy.hooks();
            run_session(&cfg, a, b).map(|out| out.result)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DetectionReport::from_results(strategy, &results))
}
