use rand::Rng;

use super::basis::{build_bases, BasisParam, Outcome, Qubit, Setting};
use super::state::{DensityMatrix2Q, LocalState};
use super::table::joint_distribution;

/// One sampled run of the two-qubit experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledRun {
    pub a: Outcome,
    pub b: Outcome,
    /// Alice's qubit after her projective measurement.
    pub alice_post: Qubit,
}

/// Draws `+1` with probability `p_plus`, consuming exactly one uniform variate.
pub fn draw_outcome<R: Rng + ?Sized>(p_plus: f64, rng: &mut R) -> Outcome {
    if rng.random::<f64>() < p_plus {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

pub fn sample_run<R: Rng + ?Sized>(
    state: &DensityMatrix2Q,
    p: BasisParam,
    sa: Setting,
    sb: Setting,
    rng: &mut R,
) -> SampledRun {
    let cells = joint_distribution(state, p, sa, sb);
    let r: f64 = rng.random::<f64>() * cells.sum();
    let mut acc = 0.0;
    let mut chosen = 3;
    for (i, c) in cells.0.iter().enumerate() {
        acc += c;
        if r < acc {
            chosen = i;
            break;
        }
    }
    let a = Outcome::ALL[chosen / 2];
    let b = Outcome::ALL[chosen % 2];
    SampledRun {
        a,
        b,
        alice_post: build_bases(p).eigenstate(sa, a),
    }
}

pub fn measure_qubit<R: Rng + ?Sized>(q: &Qubit, p: BasisParam, s: Setting, rng: &mut R) -> Outcome {
    let x = build_bases(p).eigenstate(s, Outcome::Plus);
    draw_outcome(x.overlap_sq(q), rng)
}

pub fn measure_local<R: Rng + ?Sized>(q: &LocalState, p: BasisParam, s: Setting, rng: &mut R) -> Outcome {
    let x = build_bases(p).eigenstate(s, Outcome::Plus);
    draw_outcome(q.overlap(&x), rng)
}
