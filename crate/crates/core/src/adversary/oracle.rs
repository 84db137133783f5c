//! Closed-form predictions for the cheating strategies, computed by
//! enumerating the Born-rule table rather than by simulation.

use crate::protocol::expect::{lplus_class_rate, same_basis_given_plus};
use crate::protocol::Expectations;
use crate::qcore::{build_bases, is_hardy_zero_cell, BasisParam, LocalState, Outcome, ProbTable, QuantumError, Setting};

fn table(p: BasisParam, eta: f64) -> Result<ProbTable, QuantumError> {
    Ok(Expectations::for_source(p, eta)?.table)
}

/// Probability of `measured` on a qubit prepared in the eigenstate `prepared`.
fn transition(p: BasisParam, prepared: (Setting, Outcome), measured: (Setting, Outcome)) -> f64 {
    let b = build_bases(p);
    LocalState::from_qubit(&b.eigenstate(prepared.0, prepared.1)).overlap(&b.eigenstate(measured.0, measured.1))
}

/// Probability that measuring both of Alice's qubits of an honest `R'` pair in
/// Bob's bases shows at least one `-1`, averaged over pairs.
pub fn premeasure_info_gain(p: BasisParam, eta: f64) -> Result<f64, QuantumError> {
    let t = table(p, eta)?;
    let mut weight = 0.0;
    let mut gain = 0.0;
    for sa in Setting::ALL {
        let w = lplus_class_rate(&t, sa, Outcome::Plus).min(lplus_class_rate(&t, sa, Outcome::Minus));
        let s_plus = same_basis_given_plus(&t, sa, Outcome::Plus);
        let s_minus = same_basis_given_plus(&t, sa, Outcome::Minus);
        // R' holds the pairs with split bases: (B+, B-) = (A, A') or (A', A).
        let cases = [
            (s_plus * (1.0 - s_minus), sa, sa.complement()),
            ((1.0 - s_plus) * s_minus, sa.complement(), sa),
        ];
        for (pc, b_plus, b_minus) in cases {
            let quiet = transition(p, (sa, Outcome::Plus), (b_plus, Outcome::Plus))
                * transition(p, (sa, Outcome::Minus), (b_minus, Outcome::Plus));
            weight += w * pc;
            gain += w * pc * (1.0 - quiet);
        }
    }
    Ok(if weight > 0.0 { gain / weight } else { 0.0 })
}

/// Expected announced `|R'| / |R|` when Bob keeps only exposed pairs.
pub fn premeasure_announced_fraction(p: BasisParam, eta: f64) -> Result<f64, QuantumError> {
    let e = Expectations::for_source(p, eta)?;
    Ok(e.rprime_fraction * premeasure_info_gain(p, eta)?)
}

/// Expected `|L+| / |L|` when Bob announces only `(U,-)` runs with `B = D` and
/// `(D,-)` runs with `B = U` that gave `b = +1`.
pub fn filter_lplus_fraction(p: BasisParam, eta: f64) -> Result<f64, QuantumError> {
    let t = table(p, eta)?;
    Ok(Setting::ALL
        .iter()
        .map(|&sa| t.uniform_joint(sa, Outcome::Minus, sa.complement(), Outcome::Plus))
        .sum())
}

/// Probability that a single audited padded run (true `b = -1`, claimed `+1`)
/// lands in a zero cell for Alice.
pub fn pad_lplus_lie_contradiction(p: BasisParam, eta: f64) -> Result<f64, QuantumError> {
    let t = table(p, eta)?;
    let mut minus = 0.0;
    let mut caught = 0.0;
    for sa in Setting::ALL {
        for a in Outcome::ALL {
            for sb in Setting::ALL {
                let w = t.uniform_joint(sa, a, sb, Outcome::Minus);
                minus += w;
                if is_hardy_zero_cell(sa, a, sb, Outcome::Plus) {
                    caught += w;
                }
            }
        }
    }
    Ok(caught / minus)
}

/// Probability that an audited fake `R'` pair (true bases equal, one member
/// flipped at random) puts the `+1` member in a zero cell.
pub fn fake_rprime_lie_contradiction(p: BasisParam, eta: f64) -> Result<f64, QuantumError> {
    let t = table(p, eta)?;
    let mut weight = 0.0;
    let mut caught = 0.0;
    for sa in Setting::ALL {
        let w = lplus_class_rate(&t, sa, Outcome::Plus).min(lplus_class_rate(&t, sa, Outcome::Minus));
        let s_plus = same_basis_given_plus(&t, sa, Outcome::Plus);
        let s_minus = same_basis_given_plus(&t, sa, Outcome::Minus);
        // Equal-basis pairs: both on B = A, or both on B = A'.
        for (pc, b) in [(s_plus * s_minus, sa), ((1.0 - s_plus) * (1.0 - s_minus), sa.complement())] {
            let mut hit = 0.0;
            for flip_plus in [true, false] {
                let claimed = if flip_plus { b.complement() } else { b };
                if is_hardy_zero_cell(sa, Outcome::Plus, claimed, Outcome::Plus) {
                    hit += 0.5;
                }
            }
            weight += w * pc;
            caught += w * pc * hit;
        }
    }
    Ok(if weight > 0.0 { caught / weight } else { 0.0 })
}

/// Probability that Bob catches one audited false pair built from two leftover
/// `a = -1` runs, the second declared as `(A1, +1)`: either his re-measurement
/// in `A1` returns `-1` or the claim lands in a zero cell.
pub fn false_pairs_check_detection(p: BasisParam, eta: f64) -> Result<f64, QuantumError> {
    let t = table(p, eta)?;
    let leftover = Setting::ALL.map(|s| {
        (lplus_class_rate(&t, s, Outcome::Minus) - lplus_class_rate(&t, s, Outcome::Plus)).max(0.0)
    });
    let total: f64 = leftover.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut detect = 0.0;
    for (i1, &a1) in Setting::ALL.iter().enumerate() {
        for (i2, &a2) in Setting::ALL.iter().enumerate() {
            let w = leftover[i1] * leftover[i2] / (total * total);
            let same = same_basis_given_plus(&t, a2, Outcome::Minus);
            let mut caught = 0.0;
            for (pb, b2) in [(same, a2), (1.0 - same, a2.complement())] {
                caught += pb
                    * if is_hardy_zero_cell(a1, Outcome::Plus, b2, Outcome::Plus) {
                        1.0
                    } else {
                        1.0 - transition(p, (a2, Outcome::Minus), (a1, Outcome::Plus))
                    };
            }
            detect += w * caught;
        }
    }
    Ok(detect)
}

/// Chance that at least one of `n_lies` independent lies is audited with
/// probability `audit_frac` and then caught with probability `per_check`.
pub fn compound_detection(per_check: f64, audit_frac: f64, n_lies: usize) -> f64 {
    1.0 - (1.0 - audit_frac * per_check).powi(n_lies as i32)
}
