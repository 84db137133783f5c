//! The list-building steps, written as pure functions over each party's
//! private run records.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::Encoding;
use super::message::{PairBases, PairRef};
use crate::qcore::{measure_local, BasisParam, LocalState, Outcome, Setting};

/// Alice's private record of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AliceRun {
    pub setting: Setting,
    pub outcome: Outcome,
    pub revealed: bool,
    pub consumed: bool,
}

/// Bob's private record of one run, including the qubit Alice sent in S2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BobRun {
    pub setting: Setting,
    pub outcome: Outcome,
    pub alice_qubit: LocalState,
    pub revealed: bool,
    pub consumed: bool,
}

/// Both parties' records of one run side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub alice_setting: Setting,
    pub alice_outcome: Outcome,
    pub bob_setting: Setting,
    pub bob_outcome: Outcome,
    pub alice_qubit: LocalState,
    pub revealed: bool,
    pub consumed: bool,
}

/// `ceil(frac * n)` distinct positions in `0..n`, ascending.
pub fn select_subset<R: Rng + ?Sized>(n: usize, frac: f64, rng: &mut R) -> Vec<usize> {
    let k = ((frac * n as f64).ceil() as usize).min(n);
    let mut v = index::sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

/// Indices of `l` where Bob saw `+1`, ascending.
pub fn s3_offer(runs: &[BobRun], l: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = l.iter().copied().filter(|&i| runs[i].outcome == Outcome::Plus).collect();
    out.sort_unstable();
    out
}

/// Maximal random matching of `l2` into same-setting, opposite-outcome pairs.
///
/// Within each setting group every run of the scarcer outcome class gets a
/// distinct uniformly chosen partner; member order and pair order are shuffled
/// and pair ids are assigned in the final order.
pub fn make_pairs<R: Rng + ?Sized>(runs: &[AliceRun], l2: &[usize], rng: &mut R) -> Vec<PairRef> {
    let mut raw: Vec<(usize, usize)> = Vec::new();
    for s in Setting::ALL {
        let class = |o: Outcome| -> Vec<usize> {
            l2.iter()
                .copied()
                .filter(|&i| runs[i].setting == s && runs[i].outcome == o)
                .collect()
        };
        let (plus, minus) = (class(Outcome::Plus), class(Outcome::Minus));
        let (scarce, abundant) = if plus.len() <= minus.len() { (plus, minus) } else { (minus, plus) };
        let partners = index::sample(rng, abundant.len(), scarce.len());
        for (x, j) in scarce.iter().zip(partners.iter()) {
            let y = abundant[j];
            raw.push(if rng.random::<bool>() { (*x, y) } else { (y, *x) });
        }
    }
    raw.shuffle(rng);
    number_pairs(&raw)
}

pub fn number_pairs(raw: &[(usize, usize)]) -> Vec<PairRef> {
    raw.iter()
        .enumerate()
        .map(|(pair_id, &(i1, i2))| PairRef { pair_id, i1, i2 })
        .collect()
}

/// Bob's split of the pair list.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Refinement {
    /// Pairs measured in different bases.
    pub selected: Vec<usize>,
    /// Every other pair with both bases disclosed.
    pub excluded: Vec<PairBases>,
}

pub fn s5_refine(runs: &[BobRun], pairs: &[PairRef]) -> Refinement {
    let mut r = Refinement::default();
    for p in pairs {
        let (b1, b2) = (runs[p.i1].setting, runs[p.i2].setting);
        if b1 != b2 {
            r.selected.push(p.pair_id);
        } else {
            r.excluded.push(PairBases { pair_id: p.pair_id, b1, b2 });
        }
    }
    r
}

/// Picks a uniformly random candidate whose Alice setting encodes `bit`.
pub fn s6_encode<R: Rng + ?Sized>(
    bit: u8,
    encoding: Encoding,
    candidates: &[(usize, Setting)],
    rng: &mut R,
) -> Option<usize> {
    let want = encoding.setting_for(bit);
    let pool: Vec<usize> = candidates.iter().filter(|c| c.1 == want).map(|c| c.0).collect();
    if pool.is_empty() {
        None
    } else {
        Some(pool[rng.random_range(0..pool.len())])
    }
}

/// Bob measures each of Alice's qubits in his own basis for that run; a `-1`
/// at position `j` reveals that Alice used the complement of `settings[j]`.
pub fn s7_decode<R: Rng + ?Sized>(
    qubits: [LocalState; 2],
    settings: [Setting; 2],
    p: BasisParam,
    encoding: Encoding,
    rng: &mut R,
) -> Option<u8> {
    let outcomes = [0, 1].map(|j| measure_local(&qubits[j], p, settings[j], rng));
    (0..2)
        .find(|&j| outcomes[j] == Outcome::Minus)
        .map(|j| encoding.bit_for(settings[j].complement()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::build_bases;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alice(s: Setting, o: Outcome) -> AliceRun {
        AliceRun { setting: s, outcome: o, revealed: false, consumed: false }
    }

    #[test]
    fn offer_keeps_plus_only() {
        let q = LocalState::maximally_mixed();
        let mk = |o| BobRun { setting: Setting::U, outcome: o, alice_qubit: q, revealed: false, consumed: false };
        let runs = vec![mk(Outcome::Minus), mk(Outcome::Plus), mk(Outcome::Plus), mk(Outcome::Minus)];
        assert_eq!(s3_offer(&runs, &[3, 2, 0, 1]), vec![1, 2]);
        assert!(s3_offer(&runs, &[0, 3]).is_empty());
    }

    #[test]
    fn pairing_is_maximal_and_valid() {
        let mut runs = Vec::new();
        for _ in 0..3 {
            runs.push(alice(Setting::U, Outcome::Plus));
        }
        for _ in 0..5 {
            runs.push(alice(Setting::U, Outcome::Minus));
        }
        runs.push(alice(Setting::D, Outcome::Minus));
        let l2: Vec<usize> = (0..runs.len()).collect();
        let pairs = make_pairs(&runs, &l2, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(pairs.len(), 3);
        let mut used = std::collections::HashSet::new();
        for (k, p) in pairs.iter().enumerate() {
            assert_eq!(p.pair_id, k);
            assert_eq!(runs[p.i1].setting, runs[p.i2].setting);
            assert_ne!(runs[p.i1].outcome, runs[p.i2].outcome);
            assert!(used.insert(p.i1) && used.insert(p.i2));
        }
        assert!(make_pairs(&runs, &[8], &mut ChaCha8Rng::seed_from_u64(1)).is_empty());
    }

    #[test]
    fn encode_respects_encoding() {
        let cands = [(0, Setting::U), (1, Setting::D), (2, Setting::U)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let i = s6_encode(0, Encoding::default(), &cands, &mut rng).unwrap();
            assert!(i == 0 || i == 2);
            assert_eq!(s6_encode(1, Encoding::default(), &cands, &mut rng), Some(1));
        }
        assert_eq!(s6_encode(1, Encoding::default(), &cands[..1], &mut rng), None);
        let a = s6_encode(0, Encoding::default(), &cands, &mut ChaCha8Rng::seed_from_u64(9));
        let b = s6_encode(0, Encoding::default(), &cands, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn decode_of_u_pair() {
        let p = BasisParam::golden();
        let b = build_bases(p);
        let qs = [LocalState::from_qubit(&b.u), LocalState::from_qubit(&b.u_perp)];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 20_000;
        let mut hits = 0;
        for _ in 0..n {
            if let Some(bit) = s7_decode(qs, [Setting::U, Setting::D], p, Encoding::default(), &mut rng) {
                assert_eq!(bit, 0);
                hits += 1;
            }
        }
        let f = hits as f64 / n as f64;
        assert!((f - p.alpha_sq()).abs() < 4.0 * (0.25 / n as f64).sqrt(), "{f}");
    }

    #[test]
    fn subset_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(select_subset(100, 0.25, &mut rng).len(), 25);
        assert_eq!(select_subset(3, 0.25, &mut rng).len(), 1);
        assert!(select_subset(10, 0.0, &mut rng).is_empty());
        let s = select_subset(1000, 0.1, &mut rng);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
