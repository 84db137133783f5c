//! Hook implementations of the cheating strategies. Lies are planted uniformly
//! at random among the runs or pairs that qualify, using the cheater's own
//! adversary stream so the honest streams stay untouched.

use std::collections::{HashMap, HashSet};

use nalgebra::Vector4;
use rand::seq::{index, SliceRandom};
use rand_chacha::ChaCha20Rng;

use super::strategy::SourceKind;
use crate::protocol::steps::number_pairs;
use crate::protocol::{
    AliceHooks, AliceRun, BobHooks, BobRun, PairBases, PairRef, ProtocolConfig, Refinement, RevealEntry, SourceModel,
};
use crate::qcore::{
    build_bases, measure_local, werner_state, BasisParam, LocalState, Outcome, PureState2Q, QuantumError, Setting, C64,
};

fn pick<T: Copy>(items: &[T], k: usize, rng: &mut ChaCha20Rng) -> Vec<T> {
    index::sample(rng, items.len(), k.min(items.len()))
        .into_iter()
        .map(|j| items[j])
        .collect()
}

/// Bob pads `L+` with `b = -1` runs and claims `+1` for them when audited.
#[derive(Debug, Clone, Default)]
pub struct PadLPlus {
    n_lies: usize,
    padded: HashSet<usize>,
}

impl PadLPlus {
    pub fn new(n_lies: usize) -> Self {
        Self { n_lies, padded: HashSet::new() }
    }
}

impl BobHooks for PadLPlus {
    fn checks_enabled(&self) -> bool {
        false
    }

    fn announce_list(
        &mut self,
        _p: BasisParam,
        runs: &[BobRun],
        l: &[usize],
        mut honest: Vec<usize>,
        rng: &mut ChaCha20Rng,
    ) -> Vec<usize> {
        let minus: Vec<usize> = l.iter().copied().filter(|&i| runs[i].outcome == Outcome::Minus).collect();
        let lies = pick(&minus, self.n_lies, rng);
        self.padded.extend(lies.iter().copied());
        honest.extend(lies);
        honest.sort_unstable();
        honest
    }

    fn reveal_list_run(&mut self, runs: &[BobRun], run: usize) -> RevealEntry {
        RevealEntry {
            run,
            setting: runs[run].setting,
            outcome: Some(Outcome::Plus),
        }
    }
}

/// Bob keeps only the runs he can tell are `(U,-)` with `B = D` or `(D,-)` with
/// `B = U`, reading Alice's setting and outcome off the qubit she sent.
#[derive(Debug, Clone, Copy, Default)]
pub struct FilterLPlus;

impl BobHooks for FilterLPlus {
    fn checks_enabled(&self) -> bool {
        false
    }

    fn announce_list(
        &mut self,
        p: BasisParam,
        runs: &[BobRun],
        _l: &[usize],
        honest: Vec<usize>,
        _rng: &mut ChaCha20Rng,
    ) -> Vec<usize> {
        let b = build_bases(p);
        let u_minus = LocalState::from_qubit(&b.eigenstate(Setting::U, Outcome::Minus));
        let d_minus = LocalState::from_qubit(&b.eigenstate(Setting::D, Outcome::Minus));
        honest
            .into_iter()
            .filter(|&i| {
                let r = &runs[i];
                match r.setting {
                    Setting::D => r.alice_qubit.is_close(&u_minus, 1e-9),
                    Setting::U => r.alice_qubit.is_close(&d_minus, 1e-9),
                }
            })
            .collect()
    }
}

/// Bob measures Alice's qubits of every `R'` pair in his own bases before
/// announcing, and keeps only pairs where a `-1` exposed Alice's setting.
#[derive(Debug, Clone, Copy, Default)]
pub struct PremeasureFilter;

impl BobHooks for PremeasureFilter {
    fn checks_enabled(&self) -> bool {
        false
    }

    fn refine(
        &mut self,
        p: BasisParam,
        runs: &mut [BobRun],
        pairs: &[PairRef],
        honest: Refinement,
        rng: &mut ChaCha20Rng,
    ) -> Refinement {
        let bases = build_bases(p);
        let by_id: HashMap<usize, PairRef> = pairs.iter().map(|p| (p.pair_id, *p)).collect();
        let mut out = Refinement {
            selected: Vec::new(),
            excluded: honest.excluded,
        };
        for id in honest.selected {
            let pair = by_id[&id];
            let mut exposed = false;
            for i in [pair.i1, pair.i2] {
                let s = runs[i].setting;
                let o = measure_local(&runs[i].alice_qubit, p, s, rng);
                runs[i].alice_qubit = LocalState::from_qubit(&bases.eigenstate(s, o));
                exposed |= o == Outcome::Minus;
            }
            if exposed {
                out.selected.push(id);
            } else {
                out.excluded.push(PairBases {
                    pair_id: id,
                    b1: runs[pair.i1].setting,
                    b2: runs[pair.i2].setting,
                });
            }
        }
        out
    }
}

/// Bob moves equal-basis pairs into `R'` and, when audited, claims split bases
/// by flipping one uniformly chosen member.
#[derive(Debug, Clone, Default)]
pub struct FakeRPrime {
    n_lies: usize,
    flipped: HashMap<usize, usize>,
}

impl FakeRPrime {
    pub fn new(n_lies: usize) -> Self {
        Self { n_lies, flipped: HashMap::new() }
    }
}

impl BobHooks for FakeRPrime {
    fn checks_enabled(&self) -> bool {
        false
    }

    fn refine(
        &mut self,
        _p: BasisParam,
        _runs: &mut [BobRun],
        _pairs: &[PairRef],
        mut honest: Refinement,
        rng: &mut ChaCha20Rng,
    ) -> Refinement {
        let ids: Vec<usize> = honest.excluded.iter().map(|e| e.pair_id).collect();
        let fakes = pick(&ids, self.n_lies, rng);
        for &id in &fakes {
            let pos = index::sample(rng, 2, 1).index(0);
            self.flipped.insert(id, pos);
        }
        honest.excluded.retain(|e| !self.flipped.contains_key(&e.pair_id));
        honest.selected.extend(fakes);
        honest.selected.sort_unstable();
        honest
    }

    fn reveal_subset_pair(&mut self, runs: &[BobRun], pair: &PairRef) -> [RevealEntry; 2] {
        let flip = self.flipped.get(&pair.pair_id).copied();
        let members = [pair.i1, pair.i2];
        [0, 1].map(|k| {
            let s = runs[members[k]].setting;
            RevealEntry {
                run: members[k],
                setting: if flip == Some(k) { s.complement() } else { s },
                outcome: None,
            }
        })
    }
}

/// Alice pads the pair list with pairs of leftover `a = -1` runs and, when
/// audited, claims the second member matches the first with the opposite outcome.
#[derive(Debug, Clone, Default)]
pub struct FalsePairs {
    n_lies: usize,
    /// First members of the planted pairs.
    planted: HashSet<usize>,
}

impl FalsePairs {
    pub fn new(n_lies: usize) -> Self {
        Self { n_lies, planted: HashSet::new() }
    }
}

impl AliceHooks for FalsePairs {
    fn checks_enabled(&self) -> bool {
        false
    }

    fn adjust_pairs(
        &mut self,
        runs: &[AliceRun],
        l2: &[usize],
        honest: Vec<PairRef>,
        rng: &mut ChaCha20Rng,
    ) -> Vec<PairRef> {
        let used: HashSet<usize> = honest.iter().flat_map(|p| [p.i1, p.i2]).collect();
        let leftover: Vec<usize> = l2
            .iter()
            .copied()
            .filter(|i| !used.contains(i) && runs[*i].outcome == Outcome::Minus)
            .collect();
        let k = self.n_lies.min(leftover.len() / 2);
        if k == 0 {
            return honest;
        }
        let chosen = pick(&leftover, 2 * k, rng);
        let mut raw: Vec<(usize, usize)> = honest.iter().map(|p| (p.i1, p.i2)).collect();
        for c in chosen.chunks(2) {
            self.planted.insert(c[0]);
            raw.push((c[0], c[1]));
        }
        raw.shuffle(rng);
        number_pairs(&raw)
    }

    fn reveal_pair(&mut self, runs: &[AliceRun], pair: &PairRef) -> [RevealEntry; 2] {
        let first = runs[pair.i1];
        let second = if self.planted.contains(&pair.i1) {
            (first.setting, first.outcome.flip())
        } else {
            (runs[pair.i2].setting, runs[pair.i2].outcome)
        };
        [
            RevealEntry { run: pair.i1, setting: first.setting, outcome: Some(first.outcome) },
            RevealEntry { run: pair.i2, setting: second.0, outcome: Some(second.1) },
        ]
    }
}

/// Alice distributes something other than the Hardy state.
#[derive(Debug, Clone, Copy)]
pub struct BadSource(pub SourceKind);

impl AliceHooks for BadSource {
    fn checks_enabled(&self) -> bool {
        false
    }

    fn source(&self, cfg: &ProtocolConfig) -> Result<SourceModel, QuantumError> {
        let p = cfg.alpha;
        let rho = match self.0 {
            SourceKind::Product => {
                let u = build_bases(p).u;
                PureState2Q::product(&u, &u).to_density()
            }
            SourceKind::AncillaEntangled => {
                let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                let z = C64::new(0.0, 0.0);
                PureState2Q::new(Vector4::new(h, z, z, h))?.to_density()
            }
            SourceKind::WrongAlpha(a2) => werner_state(BasisParam::from_alpha_sq(a2)?, cfg.eta)?,
        };
        Ok(SourceModel::from_density(&rho, p))
    }
}
