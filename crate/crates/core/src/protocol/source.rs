//! Alice's source, reduced to what each measurement branch hands to Bob.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::qcore::{build_bases, draw_outcome, BasisParam, DensityMatrix2Q, LocalState, Outcome, Setting};

/// One outcome branch of Alice's measurement in one setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub prob: f64,
    /// Bob's half conditioned on this branch.
    pub bob_state: LocalState,
    /// The qubit Alice hands over in S2.
    pub alice_post: LocalState,
}

/// Branch table indexed by Alice's setting then outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    branches: [[Branch; 2]; 2],
}

/// One run as produced by the source: Alice's choice and outcome plus the two
/// qubits that travel to Bob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparedRun {
    pub setting: Setting,
    pub outcome: Outcome,
    pub bob_state: LocalState,
    pub alice_post: LocalState,
}

impl SourceModel {
    /// Alice measures her half of `rho` projectively in the configured bases.
    pub fn from_density(rho: &DensityMatrix2Q, p: BasisParam) -> Self {
        let bases = build_bases(p);
        let branches = Setting::ALL.map(|s| {
            let split = rho.measure_first(&bases, s);
            [0, 1].map(|i| Branch {
                prob: split[i].0,
                bob_state: split[i].1,
                alice_post: LocalState::from_qubit(&bases.eigenstate(s, Outcome::ALL[i])),
            })
        });
        Self { branches }
    }

    pub fn branch(&self, s: Setting, a: Outcome) -> &Branch {
        &self.branches[usize::from(s == Setting::D)][usize::from(a == Outcome::Minus)]
    }

    /// Replaces the qubit Alice sends in S2 on every branch.
    pub fn with_alice_post(mut self, q: LocalState) -> Self {
        for row in &mut self.branches {
            for b in row {
                b.alice_post = q;
            }
        }
        self
    }

    /// Draws Alice's outcome for a given setting, consuming one variate.
    pub fn prepare<R: Rng + ?Sized>(&self, s: Setting, rng: &mut R) -> PreparedRun {
        let plus = self.branch(s, Outcome::Plus).prob;
        let minus = self.branch(s, Outcome::Minus).prob;
        let a = draw_outcome(plus / (plus + minus), rng);
        let b = self.branch(s, a);
        PreparedRun {
            setting: s,
            outcome: a,
            bob_state: b.bob_state,
            alice_post: b.alice_post,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{werner_state, ProbTable};

    #[test]
    fn branch_table_reproduces_joint_distribution() {
        let p = BasisParam::golden();
        for eta in [1.0, 0.9] {
            let rho = werner_state(p, eta).unwrap();
            let model = SourceModel::from_density(&rho, p);
            let t = ProbTable::from_state(&rho, p);
            let bases = build_bases(p);
            for sa in Setting::ALL {
                for a in Outcome::ALL {
                    let br = model.branch(sa, a);
                    for sb in Setting::ALL {
                        for b in Outcome::ALL {
                            let cond = br.bob_state.overlap(&bases.eigenstate(sb, b));
                            assert!((br.prob * cond - t.p(a, b, sa, sb)).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }
}
