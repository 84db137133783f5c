//! Alice, the sender.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::checks::{frequency_gate, RevealedTuple};
use super::config::ProtocolConfig;
use super::expect::Expectations;
use super::message::{AbortKind, AbortReason, Message, PairBases, PairRef, Party, RevealEntry, Step};
use super::party::{cell_index, valid_ids, Auditor, Knowledge, PartyMachine, PartyReport};
use super::rng::{self, stream};
use super::source::SourceModel;
use super::steps::{make_pairs, s6_encode, select_subset, AliceRun};
use super::ProtocolError;
use crate::qcore::{werner_state, LocalState, Outcome, QuantumError, Setting};

/// Points where a cheating Alice departs from the honest protocol. Every
/// method defaults to honest behavior.
pub trait AliceHooks: Send {
    /// A cheating party does not police its peer.
    fn checks_enabled(&self) -> bool {
        true
    }

    fn source(&self, cfg: &ProtocolConfig) -> Result<SourceModel, QuantumError> {
        honest_source(cfg)
    }

    /// S4: may add or alter pairs. `honest` is the output of [`make_pairs`].
    fn adjust_pairs(
        &mut self,
        _runs: &[AliceRun],
        _l2: &[usize],
        honest: Vec<PairRef>,
        _rng: &mut ChaCha20Rng,
    ) -> Vec<PairRef> {
        honest
    }

    /// S4(a): the two `(A, a)` entries disclosed for an audited pair.
    fn reveal_pair(&mut self, runs: &[AliceRun], pair: &PairRef) -> [RevealEntry; 2] {
        [pair.i1, pair.i2].map(|i| RevealEntry {
            run: i,
            setting: runs[i].setting,
            outcome: Some(runs[i].outcome),
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HonestAlice;

impl AliceHooks for HonestAlice {}

pub fn honest_source(cfg: &ProtocolConfig) -> Result<SourceModel, QuantumError> {
    Ok(SourceModel::from_density(&werner_state(cfg.alpha, cfg.eta)?, cfg.alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Init,
    AwaitS2aReveal,
    AwaitS2aRequest,
    AwaitList,
    AwaitS3aReveal,
    AwaitS4aRequest,
    AwaitSubset,
    AwaitS5aReveal,
    Done,
}

pub struct Alice {
    cfg: ProtocolConfig,
    hooks: Box<dyn AliceHooks>,
    source: SourceModel,
    expect: Expectations,
    rng: ChaCha20Rng,
    source_rng: ChaCha20Rng,
    adv_rng: ChaCha20Rng,
    audit: Auditor,
    state: State,
    bit: u8,
    runs: Vec<AliceRun>,
    own_s2a: Vec<usize>,
    /// Bob's S2(a) answers, checked once his own request has arrived.
    pending_s2a: Option<Vec<RevealEntry>>,
    l_size: usize,
    lplus: Vec<usize>,
    s3a_ids: Vec<usize>,
    pairs: Vec<PairRef>,
    pair_alive: Vec<bool>,
    r_prime: Vec<usize>,
    s5a_ids: Vec<usize>,
    report: PartyReport,
}

impl Alice {
    pub fn new(cfg: ProtocolConfig, hooks: Box<dyn AliceHooks>) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        let source = hooks.source(&cfg)?;
        let expect = Expectations::new(&cfg)?;
        let audit = Auditor::new(Party::Alice, &cfg, hooks.checks_enabled(), Expectations::tolerance_table(&cfg)?);
        let seed = cfg.seed;
        Ok(Self {
            source,
            expect,
            rng: stream(seed, rng::ALICE),
            source_rng: stream(seed, rng::ALICE_SOURCE),
            adv_rng: stream(seed, rng::ALICE_ADVERSARY),
            audit,
            state: State::Init,
            bit: 0,
            runs: Vec::new(),
            own_s2a: Vec::new(),
            pending_s2a: None,
            l_size: 0,
            lplus: Vec::new(),
            s3a_ids: Vec::new(),
            pairs: Vec::new(),
            pair_alive: Vec::new(),
            r_prime: Vec::new(),
            s5a_ids: Vec::new(),
            report: PartyReport::new(Party::Alice),
            hooks,
            cfg,
        })
    }

    pub fn runs(&self) -> &[AliceRun] {
        &self.runs
    }

    pub fn bit(&self) -> u8 {
        self.bit
    }

    fn malformed(&self, step: Step) -> AbortReason {
        self.audit.reason(step, AbortKind::Malformed)
    }

    fn dispatch(&mut self, msg: Message) -> Result<Vec<Message>, AbortReason> {
        match (self.state, msg) {
            (State::AwaitS2aReveal, Message::Reveal { step: Step::S2a, entries }) => {
                self.pending_s2a = Some(entries);
                self.state = State::AwaitS2aRequest;
                Ok(Vec::new())
            }
            (State::AwaitS2aRequest, Message::RevealRequest { step: Step::S2a, ids }) => self.on_s2a_request(ids),
            (State::AwaitList, Message::ListAnnouncement { runs }) => self.on_list(runs),
            (State::AwaitS3aReveal, Message::Reveal { step: Step::S3a, entries }) => self.on_s3a_reveal(entries),
            (State::AwaitS4aRequest, Message::RevealRequest { step: Step::S4a, ids }) => self.on_s4a_request(ids),
            (State::AwaitSubset, Message::PairSubset { selected, excluded }) => self.on_subset(selected, excluded),
            (State::AwaitS5aReveal, Message::Reveal { step: Step::S5a, entries }) => self.on_s5a_reveal(entries),
            (_, other) => Err(self.malformed(other.step())),
        }
    }

    fn check_s2a(&mut self, entries: Vec<RevealEntry>) -> Result<(), AbortReason> {
        let ok = entries.len() == self.own_s2a.len()
            && entries
                .iter()
                .zip(&self.own_s2a)
                .all(|(e, &i)| e.run == i && e.outcome.is_some());
        if !ok {
            return Err(self.malformed(Step::S2a));
        }
        let mut tuples = Vec::with_capacity(entries.len());
        for e in &entries {
            let r = self.runs[e.run];
            let b = e.outcome.expect("checked above");
            let (c, o) = cell_index(r.setting, r.outcome, e.setting, b);
            self.report.s2a_counts[c][o] += 1;
            tuples.push(RevealedTuple {
                run: e.run,
                alice_setting: r.setting,
                alice_outcome: r.outcome,
                bob_setting: e.setting,
                bob_outcome: b,
                remeasured: None,
            });
        }
        self.audit.hardy(Step::S2a, &tuples, Knowledge::Alice)?;
        self.audit.hardy_success(&tuples)
    }

    fn on_s2a_request(&mut self, ids: Vec<usize>) -> Result<Vec<Message>, AbortReason> {
        let entries = self.pending_s2a.take().unwrap_or_default();
        self.check_s2a(entries)?;
        let n = self.runs.len();
        let runs = &self.runs;
        if !valid_ids(&ids, |i| i < n && !runs[i].revealed) {
            return Err(self.malformed(Step::S2a));
        }
        let entries = ids
            .iter()
            .map(|&i| {
                self.runs[i].revealed = true;
                self.runs[i].consumed = true;
                RevealEntry {
                    run: i,
                    setting: self.runs[i].setting,
                    outcome: Some(self.runs[i].outcome),
                }
            })
            .collect();
        let revealed = self.runs.iter().filter(|r| r.revealed).count();
        self.report.counters.s2a_revealed = revealed;
        self.l_size = n - revealed;
        self.report.counters.l_size = self.l_size;
        self.state = State::AwaitList;
        Ok(vec![Message::Reveal { step: Step::S2a, entries }])
    }

    fn on_list(&mut self, list: Vec<usize>) -> Result<Vec<Message>, AbortReason> {
        let n = self.runs.len();
        let ascending = list.windows(2).all(|w| w[0] < w[1]);
        if !ascending || !list.iter().all(|&i| i < n && !self.runs[i].revealed) {
            return Err(self.malformed(Step::S3));
        }
        self.report.counters.l_plus = list.len();
        if let Ok(pass) = frequency_gate(list.len(), self.l_size, self.expect.lplus_fraction, self.cfg.detection_z) {
            self.audit.verdict(Step::S3a, AbortKind::FrequencyGate, pass)?;
        }
        self.lplus = list;
        let picks = select_subset(self.lplus.len(), self.cfg.frac_s3a, &mut self.rng);
        self.s3a_ids = picks.iter().map(|&k| self.lplus[k]).collect();
        self.state = State::AwaitS3aReveal;
        Ok(vec![Message::RevealRequest {
            step: Step::S3a,
            ids: self.s3a_ids.clone(),
        }])
    }

    fn on_s3a_reveal(&mut self, entries: Vec<RevealEntry>) -> Result<Vec<Message>, AbortReason> {
        let ok = entries.len() == self.s3a_ids.len()
            && entries
                .iter()
                .zip(&self.s3a_ids)
                .all(|(e, &i)| e.run == i && e.outcome.is_some());
        if !ok {
            return Err(self.malformed(Step::S3a));
        }
        let claims_plus = entries.iter().all(|e| e.outcome == Some(Outcome::Plus));
        self.audit.verdict(Step::S3a, AbortKind::HardyViolation, claims_plus)?;
        let tuples: Vec<RevealedTuple> = entries
            .iter()
            .map(|e| {
                let r = self.runs[e.run];
                RevealedTuple {
                    run: e.run,
                    alice_setting: r.setting,
                    alice_outcome: r.outcome,
                    bob_setting: e.setting,
                    bob_outcome: e.outcome.unwrap_or(Outcome::Plus),
                    remeasured: None,
                }
            })
            .collect();
        self.audit.hardy(Step::S3a, &tuples, Knowledge::AliceWithBobPlus)?;
        for &i in &self.s3a_ids {
            self.runs[i].revealed = true;
            self.runs[i].consumed = true;
        }
        let checked: HashSet<usize> = self.s3a_ids.iter().copied().collect();
        let l2: Vec<usize> = self.lplus.iter().copied().filter(|i| !checked.contains(i)).collect();
        self.report.counters.l2_plus = l2.len();
        let honest = make_pairs(&self.runs, &l2, &mut self.rng);
        let pairs = self.hooks.adjust_pairs(&self.runs, &l2, honest, &mut self.adv_rng);
        self.report.counters.pairs = pairs.len();
        self.pair_alive = vec![true; pairs.len()];
        self.pairs = pairs.clone();
        self.state = State::AwaitS4aRequest;
        Ok(vec![Message::PairList { pairs }])
    }

    fn on_s4a_request(&mut self, ids: Vec<usize>) -> Result<Vec<Message>, AbortReason> {
        let np = self.pairs.len();
        if !valid_ids(&ids, |i| i < np) {
            return Err(self.malformed(Step::S4a));
        }
        let mut entries = Vec::with_capacity(2 * ids.len());
        for &id in &ids {
            let pair = self.pairs[id];
            entries.extend(self.hooks.reveal_pair(&self.runs, &pair));
            self.pair_alive[id] = false;
            for i in [pair.i1, pair.i2] {
                self.runs[i].revealed = true;
                self.runs[i].consumed = true;
            }
        }
        self.report.counters.pairs_remaining = self.pair_alive.iter().filter(|&&a| a).count();
        self.state = State::AwaitSubset;
        Ok(vec![Message::Reveal { step: Step::S4a, entries }])
    }

    /// Tuples for runs Bob placed in `L+`, with his disclosed bases.
    fn plus_tuples(&self, items: &[(usize, Setting)]) -> Vec<RevealedTuple> {
        items
            .iter()
            .map(|&(i, b)| RevealedTuple {
                run: i,
                alice_setting: self.runs[i].setting,
                alice_outcome: self.runs[i].outcome,
                bob_setting: b,
                bob_outcome: Outcome::Plus,
                remeasured: None,
            })
            .collect()
    }

    fn on_subset(&mut self, selected: Vec<usize>, excluded: Vec<PairBases>) -> Result<Vec<Message>, AbortReason> {
        let alive: Vec<usize> = (0..self.pairs.len()).filter(|&i| self.pair_alive[i]).collect();
        let mut all: Vec<usize> = selected.iter().copied().chain(excluded.iter().map(|e| e.pair_id)).collect();
        all.sort_unstable();
        if all != alive {
            return Err(self.malformed(Step::S5));
        }
        self.report.counters.r_prime = selected.len();
        let items: Vec<(usize, Setting)> = excluded
            .iter()
            .flat_map(|e| {
                let p = self.pairs[e.pair_id];
                [(p.i1, e.b1), (p.i2, e.b2)]
            })
            .collect();
        let tuples = self.plus_tuples(&items);
        self.audit.hardy(Step::S5a, &tuples, Knowledge::AliceWithBobPlus)?;
        for e in &excluded {
            self.pair_alive[e.pair_id] = false;
        }
        if let Ok(pass) = frequency_gate(
            selected.len(),
            alive.len(),
            self.expect.rprime_fraction,
            self.cfg.detection_z,
        ) {
            self.audit.verdict(Step::S5a, AbortKind::FrequencyGate, pass)?;
        }
        self.r_prime = selected;
        let picks = select_subset(self.r_prime.len(), self.cfg.frac_s5a, &mut self.rng);
        self.s5a_ids = picks.iter().map(|&k| self.r_prime[k]).collect();
        self.state = State::AwaitS5aReveal;
        Ok(vec![Message::RevealRequest {
            step: Step::S5a,
            ids: self.s5a_ids.clone(),
        }])
    }

    fn on_s5a_reveal(&mut self, entries: Vec<RevealEntry>) -> Result<Vec<Message>, AbortReason> {
        let ok = entries.len() == 2 * self.s5a_ids.len()
            && self.s5a_ids.iter().enumerate().all(|(k, &id)| {
                let p = self.pairs[id];
                entries[2 * k].run == p.i1 && entries[2 * k + 1].run == p.i2
            });
        if !ok {
            return Err(self.malformed(Step::S5a));
        }
        let split = entries.chunks(2).all(|c| c[0].setting != c[1].setting);
        self.audit.verdict(Step::S5a, AbortKind::BasisConstraint, split)?;
        let items: Vec<(usize, Setting)> = entries.iter().map(|e| (e.run, e.setting)).collect();
        let tuples = self.plus_tuples(&items);
        self.audit.hardy(Step::S5a, &tuples, Knowledge::AliceWithBobPlus)?;
        for &id in &self.s5a_ids {
            self.pair_alive[id] = false;
            let p = self.pairs[id];
            for i in [p.i1, p.i2] {
                self.runs[i].revealed = true;
                self.runs[i].consumed = true;
            }
        }
        let checked: HashSet<usize> = self.s5a_ids.iter().copied().collect();
        let candidates: Vec<(usize, Setting)> = self
            .r_prime
            .iter()
            .filter(|id| !checked.contains(id))
            .map(|&id| (id, self.runs[self.pairs[id].i1].setting))
            .collect();
        self.report.counters.r_prime_remaining = candidates.len();
        match s6_encode(self.bit, self.cfg.encoding, &candidates, &mut self.rng) {
            Some(pair_id) => {
                let p = self.pairs[pair_id];
                self.runs[p.i1].consumed = true;
                self.runs[p.i2].consumed = true;
                self.state = State::Done;
                Ok(vec![Message::OtIndex { pair_id }])
            }
            None => Err(self.audit.reason(Step::S6, AbortKind::NoQualifyingPair)),
        }
    }
}

impl PartyMachine for Alice {
    fn party(&self) -> Party {
        Party::Alice
    }

    fn start(&mut self) -> Vec<Message> {
        if self.state != State::Init {
            return Vec::new();
        }
        self.bit = self.cfg.bit.unwrap_or_else(|| self.rng.random_range(0..2u8));
        self.report.alice_bit = Some(self.bit);
        let n = self.cfg.n_runs;
        self.report.counters.n_runs = n;
        let mut to_bob: Vec<LocalState> = Vec::with_capacity(n);
        let mut measured: Vec<LocalState> = Vec::with_capacity(n);
        self.runs.reserve(n);
        for _ in 0..n {
            let s = if self.rng.random::<bool>() { Setting::U } else { Setting::D };
            let r = self.source.prepare(s, &mut self.source_rng);
            self.runs.push(AliceRun {
                setting: r.setting,
                outcome: r.outcome,
                revealed: false,
                consumed: false,
            });
            to_bob.push(r.bob_state);
            measured.push(r.alice_post);
        }
        self.own_s2a = select_subset(n, self.cfg.frac_s2a, &mut self.rng);
        for &i in &self.own_s2a {
            self.runs[i].revealed = true;
            self.runs[i].consumed = true;
        }
        self.state = State::AwaitS2aReveal;
        vec![
            Message::QubitBatch { qubits: to_bob },
            Message::MeasuredQubit { qubits: measured },
            Message::RevealRequest {
                step: Step::S2a,
                ids: self.own_s2a.clone(),
            },
        ]
    }

    fn handle(&mut self, msg: Message) -> Vec<Message> {
        if self.state == State::Done {
            return Vec::new();
        }
        if let Message::Abort { reason } = msg {
            self.report.abort = Some(reason);
            self.state = State::Done;
            return Vec::new();
        }
        match self.dispatch(msg) {
            Ok(out) => out,
            Err(reason) => {
                self.report.abort = Some(reason);
                self.state = State::Done;
                vec![Message::Abort { reason }]
            }
        }
    }

    fn is_done(&self) -> bool {
        self.state == State::Done
    }

    fn report(&self) -> PartyReport {
        let mut r = self.report.clone();
        r.checks = self.audit.records.clone();
        r
    }
}
