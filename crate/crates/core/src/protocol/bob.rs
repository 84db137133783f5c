//! Bob, the receiver.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::checks::RevealedTuple;
use super::config::ProtocolConfig;
use super::message::{AbortKind, AbortReason, Message, PairRef, Party, RevealEntry, Step};
use super::party::{cell_index, valid_ids, Auditor, Knowledge, PartyMachine, PartyReport};
use super::rng::{self, stream};
use super::steps::{s3_offer, s5_refine, s7_decode, select_subset, BobRun, Refinement};
use super::{Expectations, ProtocolError};
use crate::qcore::{build_bases, measure_local, BasisParam, LocalState, Outcome, Setting};

/// Points where a cheating Bob departs from the honest protocol. Every method
/// defaults to honest behavior.
pub trait BobHooks: Send {
    /// A cheating party does not police its peer.
    fn checks_enabled(&self) -> bool {
        true
    }

    /// S3: the announced `L+`; `honest` is the output of [`s3_offer`].
    fn announce_list(
        &mut self,
        _p: BasisParam,
        _runs: &[BobRun],
        _l: &[usize],
        honest: Vec<usize>,
        _rng: &mut ChaCha20Rng,
    ) -> Vec<usize> {
        honest
    }

    /// S3(a): the `(B, b)` disclosed for an audited `L+` run.
    fn reveal_list_run(&mut self, runs: &[BobRun], run: usize) -> RevealEntry {
        RevealEntry {
            run,
            setting: runs[run].setting,
            outcome: Some(runs[run].outcome),
        }
    }

    /// S5: the announced split. May measure (and so alter) Alice's qubits.
    fn refine(
        &mut self,
        _p: BasisParam,
        _runs: &mut [BobRun],
        _pairs: &[PairRef],
        honest: Refinement,
        _rng: &mut ChaCha20Rng,
    ) -> Refinement {
        honest
    }

    /// S5(a): the bases disclosed for an audited `R'` pair.
    fn reveal_subset_pair(&mut self, runs: &[BobRun], pair: &PairRef) -> [RevealEntry; 2] {
        [pair.i1, pair.i2].map(|i| RevealEntry {
            run: i,
            setting: runs[i].setting,
            outcome: None,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HonestBob;

impl BobHooks for HonestBob {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    AwaitBatch,
    AwaitMeasured,
    AwaitS2aRequest,
    AwaitS2aReveal,
    AwaitS3aRequest,
    AwaitPairList,
    AwaitS4aReveal,
    AwaitS5aRequest,
    AwaitOtIndex,
    Done,
}

pub struct Bob {
    cfg: ProtocolConfig,
    hooks: Box<dyn BobHooks>,
    rng: ChaCha20Rng,
    measure_rng: ChaCha20Rng,
    decode_rng: ChaCha20Rng,
    adv_rng: ChaCha20Rng,
    audit: Auditor,
    state: State,
    runs: Vec<BobRun>,
    own_s2a: Vec<usize>,
    lplus: Vec<usize>,
    l2: Vec<usize>,
    pairs: Vec<PairRef>,
    pair_alive: Vec<bool>,
    s4a_ids: Vec<usize>,
    r_prime: Vec<usize>,
    report: PartyReport,
}

impl Bob {
    pub fn new(cfg: ProtocolConfig, hooks: Box<dyn BobHooks>) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        let audit = Auditor::new(Party::Bob, &cfg, hooks.checks_enabled(), Expectations::tolerance_table(&cfg)?);
        let seed = cfg.seed;
        Ok(Self {
            rng: stream(seed, rng::BOB),
            measure_rng: stream(seed, rng::BOB_MEASURE),
            decode_rng: stream(seed, rng::BOB_DECODE),
            adv_rng: stream(seed, rng::BOB_ADVERSARY),
            audit,
            state: State::AwaitBatch,
            runs: Vec::new(),
            own_s2a: Vec::new(),
            lplus: Vec::new(),
            l2: Vec::new(),
            pairs: Vec::new(),
            pair_alive: Vec::new(),
            s4a_ids: Vec::new(),
            r_prime: Vec::new(),
            report: PartyReport::new(Party::Bob),
            hooks,
            cfg,
        })
    }

    /// Reseeds only the S7 measurement, leaving every transmitted choice intact.
    pub fn with_decode_seed(mut self, seed: u64) -> Self {
        self.decode_rng = stream(seed, rng::BOB_DECODE);
        self
    }

    pub fn runs(&self) -> &[BobRun] {
        &self.runs
    }

    fn malformed(&self, step: Step) -> AbortReason {
        self.audit.reason(step, AbortKind::Malformed)
    }

    fn dispatch(&mut self, msg: Message) -> Result<Vec<Message>, AbortReason> {
        match (self.state, msg) {
            (State::AwaitBatch, Message::QubitBatch { qubits }) => self.on_batch(qubits),
            (State::AwaitMeasured, Message::MeasuredQubit { qubits }) => self.on_measured(qubits),
            (State::AwaitS2aRequest, Message::RevealRequest { step: Step::S2a, ids }) => self.on_s2a_request(ids),
            (State::AwaitS2aReveal, Message::Reveal { step: Step::S2a, entries }) => self.on_s2a_reveal(entries),
            (State::AwaitS3aRequest, Message::RevealRequest { step: Step::S3a, ids }) => self.on_s3a_request(ids),
            (State::AwaitPairList, Message::PairList { pairs }) => self.on_pairs(pairs),
            (State::AwaitS4aReveal, Message::Reveal { step: Step::S4a, entries }) => self.on_s4a_reveal(entries),
            (State::AwaitS5aRequest, Message::RevealRequest { step: Step::S5a, ids }) => self.on_s5a_request(ids),
            (State::AwaitOtIndex, Message::OtIndex { pair_id }) => self.on_index(pair_id),
            (_, other) => Err(self.malformed(other.step())),
        }
    }

    fn on_batch(&mut self, qubits: Vec<LocalState>) -> Result<Vec<Message>, AbortReason> {
        if qubits.len() != self.cfg.n_runs {
            return Err(self.malformed(Step::S1));
        }
        let p = self.cfg.alpha;
        self.report.counters.n_runs = qubits.len();
        self.runs = qubits
            .iter()
            .map(|q| {
                let setting = if self.rng.random::<bool>() { Setting::U } else { Setting::D };
                BobRun {
                    setting,
                    outcome: measure_local(q, p, setting, &mut self.measure_rng),
                    alice_qubit: LocalState::maximally_mixed(),
                    revealed: false,
                    consumed: false,
                }
            })
            .collect();
        self.state = State::AwaitMeasured;
        Ok(Vec::new())
    }

    fn on_measured(&mut self, qubits: Vec<LocalState>) -> Result<Vec<Message>, AbortReason> {
        if qubits.len() != self.runs.len() {
            return Err(self.malformed(Step::S2));
        }
        for (r, q) in self.runs.iter_mut().zip(qubits) {
            r.alice_qubit = q;
        }
        self.state = State::AwaitS2aRequest;
        Ok(Vec::new())
    }

    fn on_s2a_request(&mut self, ids: Vec<usize>) -> Result<Vec<Message>, AbortReason> {
        let n = self.runs.len();
        if !valid_ids(&ids, |i| i < n) {
            return Err(self.malformed(Step::S2a));
        }
        let entries: Vec<RevealEntry> = ids
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
        let free: Vec<usize> = (0..n).filter(|&i| !self.runs[i].revealed).collect();
        let k = ((self.cfg.frac_s2a * n as f64).ceil() as usize).min(free.len());
        let mut own: Vec<usize> = index::sample(&mut self.rng, free.len(), k)
            .into_iter()
            .map(|j| free[j])
            .collect();
        own.sort_unstable();
        for &i in &own {
            self.runs[i].revealed = true;
            self.runs[i].consumed = true;
        }
        self.own_s2a = own.clone();
        self.state = State::AwaitS2aReveal;
        Ok(vec![
            Message::Reveal { step: Step::S2a, entries },
            Message::RevealRequest { step: Step::S2a, ids: own },
        ])
    }

    /// Measures Alice's qubit of run `i` in `setting`; the qubit collapses.
    fn remeasure(&mut self, i: usize, setting: Setting) -> Outcome {
        let p = self.cfg.alpha;
        let o = measure_local(&self.runs[i].alice_qubit, p, setting, &mut self.measure_rng);
        self.runs[i].alice_qubit = LocalState::from_qubit(&build_bases(p).eigenstate(setting, o));
        o
    }

    fn on_s2a_reveal(&mut self, entries: Vec<RevealEntry>) -> Result<Vec<Message>, AbortReason> {
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
            let a = e.outcome.expect("checked above");
            let remeasured = self.remeasure(e.run, e.setting);
            let r = self.runs[e.run];
            let (c, o) = cell_index(e.setting, a, r.setting, r.outcome);
            self.report.s2a_counts[c][o] += 1;
            tuples.push(RevealedTuple {
                run: e.run,
                alice_setting: e.setting,
                alice_outcome: a,
                bob_setting: r.setting,
                bob_outcome: r.outcome,
                remeasured: Some(remeasured),
            });
        }
        self.audit.hardy(Step::S2a, &tuples, Knowledge::Bob)?;
        self.audit.hardy_success(&tuples)?;
        let l: Vec<usize> = (0..self.runs.len()).filter(|&i| !self.runs[i].revealed).collect();
        self.report.counters.s2a_revealed = self.runs.len() - l.len();
        self.report.counters.l_size = l.len();
        let honest = s3_offer(&self.runs, &l);
        let mut announced = self.hooks.announce_list(self.cfg.alpha, &self.runs, &l, honest, &mut self.adv_rng);
        announced.sort_unstable();
        announced.dedup();
        self.report.counters.l_plus = announced.len();
        self.lplus = announced.clone();
        self.state = State::AwaitS3aRequest;
        Ok(vec![Message::ListAnnouncement { runs: announced }])
    }

    fn on_s3a_request(&mut self, ids: Vec<usize>) -> Result<Vec<Message>, AbortReason> {
        let in_list: HashSet<usize> = self.lplus.iter().copied().collect();
        if !valid_ids(&ids, |i| in_list.contains(&i)) {
            return Err(self.malformed(Step::S3a));
        }
        let entries = ids
            .iter()
            .map(|&i| {
                self.runs[i].revealed = true;
                self.runs[i].consumed = true;
                self.hooks.reveal_list_run(&self.runs, i)
            })
            .collect();
        let checked: HashSet<usize> = ids.iter().copied().collect();
        self.l2 = self.lplus.iter().copied().filter(|i| !checked.contains(i)).collect();
        self.report.counters.l2_plus = self.l2.len();
        self.state = State::AwaitPairList;
        Ok(vec![Message::Reveal { step: Step::S3a, entries }])
    }

    fn on_pairs(&mut self, pairs: Vec<PairRef>) -> Result<Vec<Message>, AbortReason> {
        let allowed: HashSet<usize> = self.l2.iter().copied().collect();
        let mut used = HashSet::new();
        let ok = pairs.iter().enumerate().all(|(k, p)| {
            p.pair_id == k
                && p.i1 != p.i2
                && allowed.contains(&p.i1)
                && allowed.contains(&p.i2)
                && used.insert(p.i1)
                && used.insert(p.i2)
        });
        if !ok {
            return Err(self.malformed(Step::S4));
        }
        self.report.counters.pairs = pairs.len();
        self.pair_alive = vec![true; pairs.len()];
        self.pairs = pairs;
        self.s4a_ids = select_subset(self.pairs.len(), self.cfg.frac_s4a, &mut self.rng);
        self.state = State::AwaitS4aReveal;
        Ok(vec![Message::RevealRequest {
            step: Step::S4a,
            ids: self.s4a_ids.clone(),
        }])
    }

    fn on_s4a_reveal(&mut self, entries: Vec<RevealEntry>) -> Result<Vec<Message>, AbortReason> {
        let ok = entries.len() == 2 * self.s4a_ids.len()
            && entries.iter().all(|e| e.outcome.is_some())
            && self.s4a_ids.iter().enumerate().all(|(k, &id)| {
                let p = self.pairs[id];
                entries[2 * k].run == p.i1 && entries[2 * k + 1].run == p.i2
            });
        if !ok {
            return Err(self.malformed(Step::S4a));
        }
        let constraint = entries
            .chunks(2)
            .all(|c| c[0].setting == c[1].setting && c[0].outcome != c[1].outcome);
        self.audit.verdict(Step::S4a, AbortKind::PairConstraint, constraint)?;
        let mut tuples = Vec::with_capacity(entries.len());
        for e in &entries {
            let remeasured = self.remeasure(e.run, e.setting);
            let r = self.runs[e.run];
            tuples.push(RevealedTuple {
                run: e.run,
                alice_setting: e.setting,
                alice_outcome: e.outcome.expect("checked above"),
                bob_setting: r.setting,
                bob_outcome: r.outcome,
                remeasured: Some(remeasured),
            });
        }
        self.audit.hardy(Step::S4a, &tuples, Knowledge::Bob)?;
        for &id in &self.s4a_ids {
            self.pair_alive[id] = false;
            let p = self.pairs[id];
            for i in [p.i1, p.i2] {
                self.runs[i].revealed = true;
                self.runs[i].consumed = true;
            }
        }
        let remaining: Vec<PairRef> = self
            .pairs
            .iter()
            .copied()
            .filter(|p| self.pair_alive[p.pair_id])
            .collect();
        self.report.counters.pairs_remaining = remaining.len();
        let honest = s5_refine(&self.runs, &remaining);
        let refined = self
            .hooks
            .refine(self.cfg.alpha, &mut self.runs, &remaining, honest, &mut self.adv_rng);
        self.report.counters.r_prime = refined.selected.len();
        self.r_prime = refined.selected.clone();
        self.state = State::AwaitS5aRequest;
        Ok(vec![Message::PairSubset {
            selected: refined.selected,
            excluded: refined.excluded,
        }])
    }

    fn on_s5a_request(&mut self, ids: Vec<usize>) -> Result<Vec<Message>, AbortReason> {
        let in_r: HashSet<usize> = self.r_prime.iter().copied().collect();
        if !valid_ids(&ids, |i| in_r.contains(&i)) {
            return Err(self.malformed(Step::S5a));
        }
        let mut entries = Vec::with_capacity(2 * ids.len());
        for &id in &ids {
            let p = self.pairs[id];
            entries.extend(self.hooks.reveal_subset_pair(&self.runs, &p));
            for i in [p.i1, p.i2] {
                self.runs[i].revealed = true;
                self.runs[i].consumed = true;
            }
        }
        let checked: HashSet<usize> = ids.iter().copied().collect();
        self.r_prime.retain(|id| !checked.contains(id));
        self.report.counters.r_prime_remaining = self.r_prime.len();
        self.state = State::AwaitOtIndex;
        Ok(vec![Message::Reveal { step: Step::S5a, entries }])
    }

    fn on_index(&mut self, pair_id: usize) -> Result<Vec<Message>, AbortReason> {
        if !self.r_prime.contains(&pair_id) {
            return Err(self.malformed(Step::S6));
        }
        let p = self.pairs[pair_id];
        let qubits = [self.runs[p.i1].alice_qubit, self.runs[p.i2].alice_qubit];
        let settings = [self.runs[p.i1].setting, self.runs[p.i2].setting];
        self.report.bob_decoded = s7_decode(qubits, settings, self.cfg.alpha, self.cfg.encoding, &mut self.decode_rng);
        self.runs[p.i1].consumed = true;
        self.runs[p.i2].consumed = true;
        self.state = State::Done;
        Ok(Vec::new())
    }
}

impl PartyMachine for Bob {
    fn party(&self) -> Party {
        Party::Bob
    }

    fn start(&mut self) -> Vec<Message> {
        Vec::new()
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
