//! Noise-robustness and finite-sample arithmetic: the local-realistic bound of
//! the CH-type expression, the visibility threshold, the Gaussian sample-size
//! rule and the visibility-versus-runs curve.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{ch_lhs, hardy_q, BasisParam, CellProbs, Outcome, ProbTable, Setting};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("q must lie in (0, q_max], got {0}")]
    QOutOfRange(f64),
    #[error("visibility {eta} does not exceed the threshold {threshold}; no finite run count suffices")]
    InfeasibleVisibility { eta: f64, threshold: f64 },
    #[error("invalid curve range: {0}")]
    InvalidRange(String),
}

/// Largest success probability of the Hardy argument on two qubits, `(5 sqrt(5) - 11) / 2`.
pub fn q_max() -> f64 {
    (5.0 * 5f64.sqrt() - 11.0) / 2.0
}

/// Confidence settings of the reliability criterion: the CH value must exceed
/// `z * sqrt(n_probs) * sigma` with `sigma = N^(-1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Faithfulness {
    pub z: f64,
    pub n_probs: u32,
}

impl Default for Faithfulness {
    fn default() -> Self {
        Self { z: 3.0, n_probs: 4 }
    }
}

impl Faithfulness {
    /// Multiplier of `sigma`; 6 for the defaults.
    pub fn factor(&self) -> f64 {
        self.z * f64::from(self.n_probs).sqrt()
    }
}

/// The CH-type expression evaluated on the Werner mixture, `eta q - (1 - eta) / 2`.
pub fn werner_ch_value(eta: f64, q: f64) -> f64 {
    eta * q - (1.0 - eta) / 2.0
}

/// Visibilities closer than this to the threshold count as being at it.
pub const VISIBILITY_TOL: f64 = 1e-6;

fn check_q(q: f64) -> Result<(), StatsError> {
    if q > 0.0 && q <= q_max() + 1e-12 {
        Ok(())
    } else {
        Err(StatsError::QOutOfRange(q))
    }
}

/// Maximum of the CH-type expression over all 16 deterministic local strategies.
pub fn lr_max() -> f64 {
    deterministic_strategies()
        .map(|t| ch_lhs(&t))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The 16 probability tables produced by deterministic assignments
/// `(a(U), a(D), b(U), b(D))`.
pub fn deterministic_strategies() -> impl Iterator<Item = ProbTable> {
    (0u8..16).map(|mask| {
        let pick = |bit: u8| if mask & (1 << bit) == 0 { Outcome::Plus } else { Outcome::Minus };
        let alice = |s: Setting| pick(if s == Setting::U { 0 } else { 1 });
        let bob = |s: Setting| pick(if s == Setting::U { 2 } else { 3 });
        let mut cells = [CellProbs([0.0; 4]); 4];
        for sa in Setting::ALL {
            for sb in Setting::ALL {
                let mut c = [0.0; 4];
                let idx = |o: Outcome| if o == Outcome::Plus { 0 } else { 1 };
                c[2 * idx(alice(sa)) + idx(bob(sb))] = 1.0;
                cells[2 * usize::from(sa == Setting::D) + usize::from(sb == Setting::D)] = CellProbs(c);
            }
        }
        ProbTable::new(cells).expect("deterministic tables are normalized")
    })
}

/// Visibility above which the Werner mixture violates the local-realistic bound.
pub fn min_visibility(q: f64) -> Result<f64, StatsError> {
    check_q(q)?;
    Ok(1.0 / (1.0 + 2.0 * q))
}

/// `(eta q - (1 - eta) / 2) - factor / sqrt(n)`; positive iff the criterion holds.
pub fn reliability_margin_with(eta: f64, q: f64, n: u64, f: Faithfulness) -> f64 {
    werner_ch_value(eta, q) - f.factor() / (n.max(1) as f64).sqrt()
}

pub fn reliability_margin(eta: f64, q: f64, n: u64) -> f64 {
    reliability_margin_with(eta, q, n, Faithfulness::default())
}

/// Smallest run count with a positive reliability margin.
pub fn min_runs_with(eta: f64, q: f64, f: Faithfulness) -> Result<u64, StatsError> {
    check_q(q)?;
    let threshold = 1.0 / (1.0 + 2.0 * q);
    if !(eta > threshold + VISIBILITY_TOL) {
        return Err(StatsError::InfeasibleVisibility { eta, threshold });
    }
    let excess = eta * (2.0 * q + 1.0) - 1.0;
    let bound = (2.0 * f.factor() / excess).powi(2);
    let mut n = bound.floor() as u64 + 1;
    // Settle rounding at the boundary against the margin itself.
    while n > 1 && reliability_margin_with(eta, q, n - 1, f) > 0.0 {
        n -= 1;
    }
    while reliability_margin_with(eta, q, n, f) <= 0.0 {
        n += 1;
    }
    Ok(n)
}

pub fn min_runs(eta: f64, q: f64) -> Result<u64, StatsError> {
    min_runs_with(eta, q, Faithfulness::default())
}

/// Summary of the noise analysis at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAnalysis {
    pub q: f64,
    pub eta: f64,
    pub ch_value: f64,
    pub eta_min: f64,
    /// `None` when the visibility is at or below the threshold.
    pub runs_required: Option<u64>,
}

impl NoiseAnalysis {
    pub fn new(p: BasisParam, eta: f64) -> Self {
        let q = hardy_q(p);
        Self {
            q,
            eta,
            ch_value: werner_ch_value(eta, q),
            eta_min: 1.0 / (1.0 + 2.0 * q),
            runs_required: min_runs(eta, q).ok(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n_runs: u64,
    pub eta_min: f64,
}

/// Minimal visibility as a function of the run count, `(1 + 12/sqrt(N)) / (2q + 1)`,
/// clipped to 1 and sampled on a logarithmic grid of distinct integers.
pub fn figure1_curve(q: f64, n_min: u64, n_max: u64, steps: usize) -> Result<Vec<CurvePoint>, StatsError> {
    check_q(q)?;
    if n_min == 0 || n_max < n_min {
        return Err(StatsError::InvalidRange(format!("{n_min}..{n_max}")));
    }
    if steps == 0 {
        return Err(StatsError::InvalidRange("steps must be positive".into()));
    }
    let f = Faithfulness::default();
    let (lo, hi) = ((n_min as f64).ln(), (n_max as f64).ln());
    let mut ns: Vec<u64> = if steps == 1 {
        vec![n_min]
    } else {
        (0..steps)
            .map(|i| (lo + (hi - lo) * i as f64 / (steps - 1) as f64).exp().round() as u64)
            .collect()
    };
    ns[0] = n_min;
    if let Some(last) = ns.last_mut() {
        *last = n_max;
    }
    ns.dedup();
    Ok(ns
        .into_iter()
        .map(|n| CurvePoint {
            n_runs: n,
            eta_min: ((1.0 + 2.0 * f.factor() / (n as f64).sqrt()) / (2.0 * q + 1.0)).min(1.0),
        })
        .collect())
}

/// Writes `n_runs,eta_min` rows.
pub fn write_curve_csv<W: std::io::Write>(points: &[CurvePoint], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}
