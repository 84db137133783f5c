//! The honesty checks: Hardy-zero cross checks, re-measurement comparison and
//! the frequency gates, plus the tolerant variants used when the source is noisy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{is_hardy_zero_cell, Outcome, ProbTable, Setting};

/// `(A, a, B, b)` for one run as assembled by the checking party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealedTuple {
    pub run: usize,
    pub alice_setting: Setting,
    pub alice_outcome: Outcome,
    pub bob_setting: Setting,
    pub bob_outcome: Outcome,
    /// Bob's re-measurement of Alice's qubit in `alice_setting`, when performed.
    pub remeasured: Option<Outcome>,
}

impl RevealedTuple {
    pub fn hits_zero_cell(&self) -> bool {
        is_hardy_zero_cell(self.alice_setting, self.alice_outcome, self.bob_setting, self.bob_outcome)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    HardyZero,
    RemeasureMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub run: usize,
    pub kind: ViolationKind,
}

pub fn cross_check(tuples: &[RevealedTuple]) -> Vec<Violation> {
    let mut out = Vec::new();
    for t in tuples {
        if t.hits_zero_cell() {
            out.push(Violation { run: t.run, kind: ViolationKind::HardyZero });
        }
        if t.remeasured.is_some_and(|r| r != t.alice_outcome) {
            out.push(Violation { run: t.run, kind: ViolationKind::RemeasureMismatch });
        }
    }
    out
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GateError {
    #[error("frequency gate needs a non-empty sample")]
    EmptySample,
    #[error("observed count {observed} exceeds total {total}")]
    CountExceedsTotal { observed: usize, total: usize },
}

/// Passes iff `|k/n - p| <= z sqrt(p (1 - p) / n)`.
pub fn frequency_gate(observed: usize, total: usize, expected_p: f64, z: f64) -> Result<bool, GateError> {
    if total == 0 {
        return Err(GateError::EmptySample);
    }
    if observed > total {
        return Err(GateError::CountExceedsTotal { observed, total });
    }
    let n = total as f64;
    let sigma = (expected_p * (1.0 - expected_p) / n).sqrt();
    Ok((observed as f64 / n - expected_p).abs() <= z * sigma + 1e-12)
}

/// Probability that a uniformly-set run satisfying `known` lands in a Hardy-zero
/// cell under `table`.
pub fn zero_hit_probability<F>(table: &ProbTable, known: F) -> f64
where
    F: Fn(Setting, Outcome, Setting, Outcome) -> bool,
{
    let (mut hit, mut all) = (0.0, 0.0);
    for sa in Setting::ALL {
        for a in Outcome::ALL {
            for sb in Setting::ALL {
                for b in Outcome::ALL {
                    if !known(sa, a, sb, b) {
                        continue;
                    }
                    let w = table.uniform_joint(sa, a, sb, b);
                    all += w;
                    if is_hardy_zero_cell(sa, a, sb, b) {
                        hit += w;
                    }
                }
            }
        }
    }
    if all > 0.0 {
        hit / all
    } else {
        0.0
    }
}

/// Noise-mode test on a count of zero-cell hits: passes iff the count stays
/// within `z` standard deviations of its expected value, where each checked
/// tuple contributes its own hit probability.
pub fn violation_budget_gate(hits: usize, probs: &[f64], z: f64) -> bool {
    let mean: f64 = probs.iter().sum();
    let var: f64 = probs.iter().map(|p| p * (1.0 - p)).sum();
    hits as f64 <= mean + z * var.sqrt() + 1e-9
}

/// Noise-mode test of the Hardy success cell: `k/n` must not fall more than `z`
/// binomial deviations below `threshold`. Empty samples pass.
pub fn success_gate(k: usize, n: usize, threshold: f64, z: f64) -> bool {
    if n == 0 {
        return true;
    }
    let p = threshold.clamp(0.0, 1.0);
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    k as f64 / n as f64 >= threshold - z * sigma - 1e-12
}
