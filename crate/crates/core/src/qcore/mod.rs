//! Exact two-qubit mathematics for the Hardy correlations.
//!
//! Alice holds the first qubit and Bob the second. Both measure one of the two
//! observables `U` and `D`; `|u>` and `|d>` are their `+1` eigenstates and
//! `|d> = alpha|u> + beta|u_perp>` with real positive `alpha`, `beta`.
//!
//! Every function here is pure except the samplers, which only advance the
//! caller-supplied RNG.

mod basis;
mod sampling;
mod state;
mod table;

use thiserror::Error;

pub use basis::{build_bases, golden_alpha_sq, BasisParam, Bases, Outcome, Qubit, Setting, C64};
pub use sampling::{draw_outcome, measure_local, measure_qubit, sample_run, SampledRun};
pub use state::{hardy_q, hardy_state, werner_state, BornRule, DensityMatrix2Q, LocalState, PureState2Q};
pub use table::{
    ch_lhs, check_hardy, is_hardy_zero_cell, joint_distribution, CellProbs, ProbTable, HARDY_ZERO_CELLS,
    TABLE_SUM_TOL,
};

/// Tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance on the smallest eigenvalue of a density matrix.
pub const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("basis parameter must lie strictly inside (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("visibility must lie in [0, 1], got {0}")]
    InvalidVisibility(f64),
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian (max deviation {0})")]
    NotHermitian(f64),
    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("density matrix has negative eigenvalue {0}")]
    NotPositive(f64),
    #[error("epsilon must be non-negative, got {0}")]
    NegativeEpsilon(f64),
    #[error("invalid probability table: {0}")]
    InvalidTable(String),
}
