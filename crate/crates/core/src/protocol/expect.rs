//! What an honest session should look like: list fractions derived from the
//! Born-rule table of the reference source.

use serde::{Deserialize, Serialize};

use super::config::ProtocolConfig;
use crate::qcore::{werner_state, BasisParam, Outcome, ProbTable, QuantumError, Setting};

/// Probability that a uniformly-set run has Alice's `(A, a)` and Bob's `b = +1`.
pub fn lplus_class_rate(table: &ProbTable, sa: Setting, a: Outcome) -> f64 {
    Setting::ALL
        .iter()
        .map(|&sb| table.uniform_joint(sa, a, sb, Outcome::Plus))
        .sum()
}

/// `P(B = A | A, a, b = +1)`.
pub fn same_basis_given_plus(table: &ProbTable, sa: Setting, a: Outcome) -> f64 {
    let total = lplus_class_rate(table, sa, a);
    if total > 0.0 {
        table.uniform_joint(sa, a, sa, Outcome::Plus) / total
    } else {
        0.0
    }
}

/// Expected `|R'| / |R|` under maximal matching within each Alice setting.
pub fn rprime_fraction(table: &ProbTable) -> f64 {
    let mut weight = 0.0;
    let mut hit = 0.0;
    for sa in Setting::ALL {
        let w = lplus_class_rate(table, sa, Outcome::Plus).min(lplus_class_rate(table, sa, Outcome::Minus));
        let s_plus = same_basis_given_plus(table, sa, Outcome::Plus);
        let s_minus = same_basis_given_plus(table, sa, Outcome::Minus);
        let differ = s_plus * (1.0 - s_minus) + (1.0 - s_plus) * s_minus;
        weight += w;
        hit += w * differ;
    }
    if weight > 0.0 {
        hit / weight
    } else {
        0.0
    }
}

/// Honest-session reference values used by the frequency gates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    pub table: ProbTable,
    /// Expected `|L+| / |L|`.
    pub lplus_fraction: f64,
    /// Expected `|R'| / |R|`.
    pub rprime_fraction: f64,
}

impl Expectations {
    pub fn for_source(p: BasisParam, eta: f64) -> Result<Self, QuantumError> {
        let table = ProbTable::from_state(&werner_state(p, eta)?, p);
        Ok(Self {
            table,
            lplus_fraction: table.bob_plus_marginal(),
            rprime_fraction: rprime_fraction(&table),
        })
    }

    pub fn new(cfg: &ProtocolConfig) -> Result<Self, QuantumError> {
        Self::for_source(cfg.alpha, cfg.eta)
    }

    /// Table the noise-tolerant checks compare against: every zero cell carries
    /// exactly `epsilon`.
    pub fn tolerance_table(cfg: &ProtocolConfig) -> Result<ProbTable, QuantumError> {
        let eta = (1.0 - 4.0 * cfg.epsilon).clamp(0.0, 1.0);
        Ok(ProbTable::from_state(&werner_state(cfg.alpha, eta)?, cfg.alpha))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_reference_values() {
        let e = Expectations::for_source(BasisParam::golden(), 1.0).unwrap();
        assert!((e.lplus_fraction - 0.427051).abs() < 1e-6);
        assert!((e.rprime_fraction - 0.5).abs() < 1e-9);
        let t = &e.table;
        assert!((lplus_class_rate(t, Setting::U, Outcome::Plus) - 0.022542).abs() < 1e-6);
        assert!((lplus_class_rate(t, Setting::U, Outcome::Minus) - 0.190983).abs() < 1e-6);
        assert!((lplus_class_rate(t, Setting::D, Outcome::Plus) - 0.059017).abs() < 1e-6);
        assert!((lplus_class_rate(t, Setting::D, Outcome::Minus) - 0.154508).abs() < 1e-6);
        assert!((same_basis_given_plus(t, Setting::U, Outcome::Plus) - 1.0).abs() < 1e-12);
        assert!((1.0 - same_basis_given_plus(t, Setting::U, Outcome::Minus) - 0.809017).abs() < 1e-6);
        assert!((1.0 - same_basis_given_plus(t, Setting::D, Outcome::Minus) - 0.381966).abs() < 1e-6);
    }

    #[test]
    fn u_to_d_pair_ratio() {
        let e = Expectations::for_source(BasisParam::golden(), 1.0).unwrap();
        let u = lplus_class_rate(&e.table, Setting::U, Outcome::Plus);
        let d = lplus_class_rate(&e.table, Setting::D, Outcome::Plus);
        assert!((u / (u + d) - 0.276393).abs() < 1e-6);
    }

    #[test]
    fn tolerance_table_zero_cells() {
        let cfg = ProtocolConfig { epsilon: 0.01, eta: 0.95, ..Default::default() };
        let t = Expectations::tolerance_table(&cfg).unwrap();
        let v = t.p(Outcome::Plus, Outcome::Plus, Setting::U, Setting::D);
        assert!((v - 0.01).abs() < 1e-12);
    }
}
