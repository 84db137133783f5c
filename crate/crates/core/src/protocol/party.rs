//! Pieces shared by both party machines: the machine interface, the audit log
//! and the per-party report.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::checks::{cross_check, success_gate, violation_budget_gate, zero_hit_probability, RevealedTuple, ViolationKind};
use super::config::ProtocolConfig;
use super::message::{AbortKind, AbortReason, Message, Party, Step};
use crate::qcore::{Outcome, ProbTable, Setting};

/// A protocol party driven by incoming messages.
pub trait PartyMachine {
    fn party(&self) -> Party;
    /// Messages the party sends before hearing from its peer.
    fn start(&mut self) -> Vec<Message>;
    fn handle(&mut self, msg: Message) -> Vec<Message>;
    fn is_done(&self) -> bool;
    fn report(&self) -> PartyReport;
}

/// List sizes seen during a session; zero when the step was never reached.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub n_runs: usize,
    /// Runs revealed in S2(a) by either party.
    pub s2a_revealed: usize,
    /// `|L|`.
    pub l_size: usize,
    /// `|L+|` as announced.
    pub l_plus: usize,
    /// `|L2+|`, the part of `L+` left after S3(a).
    pub l2_plus: usize,
    /// `|{R_i}|` as announced.
    pub pairs: usize,
    /// Pairs left after S4(a).
    pub pairs_remaining: usize,
    /// `|{R'_i}|` as announced.
    pub r_prime: usize,
    /// `R'` pairs left after S5(a).
    pub r_prime_remaining: usize,
}

impl Counters {
    pub fn merge(&self, o: &Counters) -> Counters {
        Counters {
            n_runs: self.n_runs.max(o.n_runs),
            s2a_revealed: self.s2a_revealed.max(o.s2a_revealed),
            l_size: self.l_size.max(o.l_size),
            l_plus: self.l_plus.max(o.l_plus),
            l2_plus: self.l2_plus.max(o.l2_plus),
            pairs: self.pairs.max(o.pairs),
            pairs_remaining: self.pairs_remaining.max(o.pairs_remaining),
            r_prime: self.r_prime.max(o.r_prime),
            r_prime_remaining: self.r_prime_remaining.max(o.r_prime_remaining),
        }
    }

    /// `|L+| / |L|`, if `L` was formed.
    pub fn lplus_fraction(&self) -> Option<f64> {
        (self.l_size > 0).then(|| self.l_plus as f64 / self.l_size as f64)
    }

    /// `|R'| / |R|` over the pairs that survived S4(a).
    pub fn rprime_fraction(&self) -> Option<f64> {
        (self.pairs_remaining > 0).then(|| self.r_prime as f64 / self.pairs_remaining as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub step: Step,
    pub kind: AbortKind,
    pub by: Party,
    pub passed: bool,
}

/// Everything one party can say about its session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyReport {
    pub party: Party,
    pub alice_bit: Option<u8>,
    pub bob_decoded: Option<u8>,
    pub abort: Option<AbortReason>,
    pub counters: Counters,
    pub checks: Vec<CheckRecord>,
    /// Outcome counts of the fully revealed S2(a) runs this party queried,
    /// indexed like [`ProbTable`] cells.
    pub s2a_counts: [[u64; 4]; 4],
}

impl PartyReport {
    pub fn new(party: Party) -> Self {
        Self {
            party,
            alice_bit: None,
            bob_decoded: None,
            abort: None,
            counters: Counters::default(),
            checks: Vec::new(),
            s2a_counts: [[0; 4]; 4],
        }
    }
}

pub(crate) fn cell_index(sa: Setting, a: Outcome, sb: Setting, b: Outcome) -> (usize, usize) {
    let s = |x: Setting| usize::from(x == Setting::D);
    let o = |x: Outcome| usize::from(x == Outcome::Minus);
    (2 * s(sa) + s(sb), 2 * o(a) + o(b))
}

/// What the checking party knew about a run before the reveal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Knowledge {
    /// Alice's own setting and outcome.
    Alice,
    /// Alice's own record plus Bob's `+1` from `L+`.
    AliceWithBobPlus,
    /// Bob's own setting and outcome.
    Bob,
}

/// Runs checks on behalf of one party and keeps the log.
pub(crate) struct Auditor {
    pub party: Party,
    pub enabled: bool,
    pub strict: bool,
    pub z: f64,
    pub tolerance: ProbTable,
    pub success_threshold: f64,
    pub records: Vec<CheckRecord>,
}

impl Auditor {
    pub fn new(party: Party, cfg: &ProtocolConfig, enabled: bool, tolerance: ProbTable) -> Self {
        Self {
            party,
            enabled,
            strict: cfg.strict(),
            z: cfg.detection_z,
            tolerance,
            success_threshold: crate::qcore::hardy_q(cfg.alpha) - 3.0 * cfg.epsilon,
            records: Vec::new(),
        }
    }

    pub fn reason(&self, step: Step, kind: AbortKind) -> AbortReason {
        AbortReason { step, kind, raised_by: self.party }
    }

    /// Logs a verdict; a failure becomes an abort unless checks are disabled.
    pub fn verdict(&mut self, step: Step, kind: AbortKind, passed: bool) -> Result<(), AbortReason> {
        if !self.enabled {
            return Ok(());
        }
        self.records.push(CheckRecord { step, kind, by: self.party, passed });
        if passed {
            Ok(())
        } else {
            Err(self.reason(step, kind))
        }
    }

    /// Hardy-zero cross check plus the re-measurement comparison.
    pub fn hardy(&mut self, step: Step, tuples: &[RevealedTuple], know: Knowledge) -> Result<(), AbortReason> {
        if !self.enabled {
            return Ok(());
        }
        let violations = cross_check(tuples);
        let mismatch = violations.iter().any(|v| v.kind == ViolationKind::RemeasureMismatch);
        let hits = violations.iter().filter(|v| v.kind == ViolationKind::HardyZero).count();
        let hardy_ok = if self.strict {
            hits == 0
        } else {
            let probs: Vec<f64> = tuples
                .iter()
                .map(|t| {
                    zero_hit_probability(&self.tolerance, |sa, a, sb, b| match know {
                        Knowledge::Alice => sa == t.alice_setting && a == t.alice_outcome,
                        Knowledge::AliceWithBobPlus => {
                            sa == t.alice_setting && a == t.alice_outcome && b == Outcome::Plus
                        }
                        Knowledge::Bob => sb == t.bob_setting && b == t.bob_outcome,
                    })
                })
                .collect();
            violation_budget_gate(hits, &probs, self.z)
        };
        self.verdict(step, AbortKind::HardyViolation, hardy_ok)?;
        if tuples.iter().any(|t| t.remeasured.is_some()) {
            self.verdict(step, AbortKind::RemeasureMismatch, !mismatch)?;
        }
        Ok(())
    }

    /// Noise-mode test of the `(+,+|U,U)` cell on fully revealed S2(a) tuples.
    pub fn hardy_success(&mut self, tuples: &[RevealedTuple]) -> Result<(), AbortReason> {
        if self.strict || !self.enabled {
            return Ok(());
        }
        let uu: Vec<&RevealedTuple> = tuples
            .iter()
            .filter(|t| t.alice_setting == Setting::U && t.bob_setting == Setting::U)
            .collect();
        let k = uu
            .iter()
            .filter(|t| t.alice_outcome == Outcome::Plus && t.bob_outcome == Outcome::Plus)
            .count();
        let ok = success_gate(k, uu.len(), self.success_threshold, self.z);
        self.verdict(Step::S2a, AbortKind::HardySuccess, ok)
    }
}

/// Rejects requests with duplicate or out-of-range ids.
pub(crate) fn valid_ids(ids: &[usize], allowed: impl Fn(usize) -> bool) -> bool {
    let mut seen = HashSet::with_capacity(ids.len());
    ids.iter().all(|&i| allowed(i) && seen.insert(i))
}
