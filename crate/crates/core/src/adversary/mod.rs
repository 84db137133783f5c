//! Cheating strategies for either party, closed-form predictions of how often
//! each is caught, and the Monte Carlo estimator that measures it.

mod behaviors;
pub mod eval;
pub mod oracle;
mod strategy;

pub use behaviors::{BadSource, FakeRPrime, FalsePairs, FilterLPlus, PadLPlus, PremeasureFilter};
pub use eval::{detection_rate, DetectionReport};
pub use strategy::{apply_strategy, ParseStrategyError, SourceKind, Strategy};
