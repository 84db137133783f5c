use serde::{Deserialize, Serialize};

use super::basis::{build_bases, BasisParam, Outcome, Setting};
use super::state::{hardy_q, BornRule};
use super::{QuantumError, ALGEBRAIC_TOL};

/// Tolerance on the per-setting-pair normalization of a [`ProbTable`].
pub const TABLE_SUM_TOL: f64 = 1e-10;

/// The four conditional probabilities `P(a, b | sa, sb)` for one setting pair,
/// ordered `(+,+), (+,-), (-,+), (-,-)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellProbs(pub [f64; 4]);

impl CellProbs {
    pub fn get(&self, a: Outcome, b: Outcome) -> f64 {
        self.0[2 * a.index() + b.index()]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Born-rule evaluation of `P(a, b | sa, sb)` on any two-qubit state.
pub fn joint_distribution<S: BornRule>(state: &S, p: BasisParam, sa: Setting, sb: Setting) -> CellProbs {
    let b = build_bases(p);
    let mut cells = [0.0; 4];
    for a in Outcome::ALL {
        for o in Outcome::ALL {
            let x = b.eigenstate(sa, a);
            let y = b.eigenstate(sb, o);
            cells[2 * a.index() + o.index()] = state.product_probability(&x, &y).max(0.0);
        }
    }
    CellProbs(cells)
}

/// Joint outcome probabilities for all four setting pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbTable {
    /// Indexed by `2 * sa + sb` with `U = 0`, `D = 1`.
    cells: [CellProbs; 4],
}

impl ProbTable {
    pub fn new(cells: [CellProbs; 4]) -> Result<Self, QuantumError> {
        for (i, c) in cells.iter().enumerate() {
            if c.0.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(QuantumError::InvalidTable(format!("cell out of [0,1] in setting pair {i}")));
            }
            if (c.sum() - 1.0).abs() > TABLE_SUM_TOL {
                return Err(QuantumError::InvalidTable(format!(
                    "setting pair {i} sums to {}",
                    c.sum()
                )));
            }
        }
        Ok(Self { cells })
    }

    pub fn from_state<S: BornRule>(state: &S, p: BasisParam) -> Self {
        let mut cells = [CellProbs([0.0; 4]); 4];
        for sa in Setting::ALL {
            for sb in Setting::ALL {
                cells[2 * sa.index() + sb.index()] = joint_distribution(state, p, sa, sb);
            }
        }
        Self { cells }
    }

    /// Relative frequencies from outcome counts; `None` when some setting pair
    /// has no samples.
    pub fn from_counts(counts: &[[u64; 4]; 4]) -> Option<Self> {
        let mut cells = [CellProbs([0.0; 4]); 4];
        for (i, c) in counts.iter().enumerate() {
            let total: u64 = c.iter().sum();
            if total == 0 {
                return None;
            }
            cells[i] = CellProbs(c.map(|n| n as f64 / total as f64));
        }
        Some(Self { cells })
    }

    pub fn cells(&self, sa: Setting, sb: Setting) -> &CellProbs {
        &self.cells[2 * sa.index() + sb.index()]
    }

    pub fn p(&self, a: Outcome, b: Outcome, sa: Setting, sb: Setting) -> f64 {
        self.cells(sa, sb).get(a, b)
    }

    /// Joint probability of `(A, a, B, b)` when both settings are chosen uniformly.
    pub fn uniform_joint(&self, sa: Setting, a: Outcome, sb: Setting, b: Outcome) -> f64 {
        0.25 * self.p(a, b, sa, sb)
    }

    /// Bob's `+1` marginal averaged over both parties' uniform setting choices.
    pub fn bob_plus_marginal(&self) -> f64 {
        let mut s = 0.0;
        for sa in Setting::ALL {
            for sb in Setting::ALL {
                for a in Outcome::ALL {
                    s += self.uniform_joint(sa, a, sb, Outcome::Plus);
                }
            }
        }
        s
    }
}

/// The three cells that vanish on the Hardy state: `(+,+|U,D)`, `(+,+|D,U)`, `(-,-|D,D)`.
pub const HARDY_ZERO_CELLS: [(Setting, Outcome, Setting, Outcome); 3] = [
    (Setting::U, Outcome::Plus, Setting::D, Outcome::Plus),
    (Setting::D, Outcome::Plus, Setting::U, Outcome::Plus),
    (Setting::D, Outcome::Minus, Setting::D, Outcome::Minus),
];

pub fn is_hardy_zero_cell(sa: Setting, a: Outcome, sb: Setting, b: Outcome) -> bool {
    HARDY_ZERO_CELLS.contains(&(sa, a, sb, b))
}

/// Noisy Hardy test: `P(+,+|U,U) > q - 3 eps` and each zero cell `<= eps`,
/// with `q` taken from the configured basis parameter.
pub fn check_hardy(t: &ProbTable, p: BasisParam, epsilon: f64) -> Result<bool, QuantumError> {
    if !(epsilon >= 0.0) {
        return Err(QuantumError::NegativeEpsilon(epsilon));
    }
    let q = hardy_q(p);
    let success = t.p(Outcome::Plus, Outcome::Plus, Setting::U, Setting::U) > q - 3.0 * epsilon - ALGEBRAIC_TOL;
    let zeros_ok = HARDY_ZERO_CELLS
        .iter()
        .all(|&(sa, a, sb, b)| t.p(a, b, sa, sb) <= epsilon + ALGEBRAIC_TOL);
    Ok(success && zeros_ok)
}

/// Left-hand side of the CH-type inequality whose local-realistic bound is 0.
pub fn ch_lhs(t: &ProbTable) -> f64 {
    use Outcome::{Minus, Plus};
    use Setting::{D, U};
    t.p(Plus, Plus, U, U) - t.p(Plus, Plus, U, D) - t.p(Plus, Plus, D, U) - t.p(Minus, Minus, D, D)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{hardy_state, werner_state};

    #[test]
    fn ideal_table_passes_with_zero_epsilon() {
        let p = BasisParam::golden();
        let t = ProbTable::from_state(&hardy_state(p), p);
        assert!(check_hardy(&t, p, 0.0).unwrap());
    }

    #[test]
    fn werner_noise_cells_against_epsilon() {
        let p = BasisParam::golden();
        let t95 = ProbTable::from_state(&werner_state(p, 0.95).unwrap(), p);
        assert!(check_hardy(&t95, p, 0.0125).unwrap());
        let t90 = ProbTable::from_state(&werner_state(p, 0.9).unwrap(), p);
        assert!(!check_hardy(&t90, p, 0.01).unwrap());
    }

    #[test]
    fn negative_epsilon_rejected() {
        let p = BasisParam::golden();
        let t = ProbTable::from_state(&hardy_state(p), p);
        assert!(check_hardy(&t, p, -1e-3).is_err());
    }

    #[test]
    fn invalid_tables_rejected() {
        let ok = CellProbs([0.25; 4]);
        assert!(ProbTable::new([ok; 4]).is_ok());
        let bad = CellProbs([0.5, 0.5, 0.5, 0.0]);
        assert!(ProbTable::new([ok, ok, bad, ok]).is_err());
        let neg = CellProbs([1.1, -0.1, 0.0, 0.0]);
        assert!(ProbTable::new([ok, neg, ok, ok]).is_err());
    }

    #[test]
    fn empirical_table_needs_every_setting_pair() {
        let mut counts = [[1u64, 1, 1, 1]; 4];
        assert!(ProbTable::from_counts(&counts).is_some());
        counts[3] = [0; 4];
        assert!(ProbTable::from_counts(&counts).is_none());
    }

    #[test]
    fn ch_lhs_values() {
        let p = BasisParam::golden();
        let ideal = ProbTable::from_state(&hardy_state(p), p);
        assert!((ch_lhs(&ideal) - 0.090170).abs() < 1e-6);
        let noisy = ProbTable::from_state(&werner_state(p, 0.9).unwrap(), p);
        assert!((ch_lhs(&noisy) - 0.031153).abs() < 1e-6);
        let eta = 1.0 / (1.0 + 2.0 * hardy_q(p));
        let edge = ProbTable::from_state(&werner_state(p, eta).unwrap(), p);
        assert!(ch_lhs(&edge).abs() < 1e-12);
    }
}
