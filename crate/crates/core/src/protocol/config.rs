use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::qcore::{hardy_q, BasisParam, Setting};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{name} must lie in [0, 1), got {value}")]
    Fraction { name: &'static str, value: f64 },
    #[error("visibility must lie in [0, 1], got {0}")]
    Visibility(f64),
    #[error("run count must be at least 1")]
    NoRuns,
    #[error("epsilon must satisfy 0 <= eps < q/3 = {limit}, got {value}")]
    Epsilon { value: f64, limit: f64 },
    #[error("detection z must be positive, got {0}")]
    DetectionZ(f64),
    #[error("encoding must map the two bits to different settings")]
    Encoding,
    #[error("bit must be 0 or 1, got {0}")]
    Bit(u8),
}

/// Which Alice setting pair carries which bit value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub zero: Setting,
    pub one: Setting,
}

impl Default for Encoding {
    fn default() -> Self {
        Self {
            zero: Setting::U,
            one: Setting::D,
        }
    }
}

impl Encoding {
    pub fn setting_for(&self, bit: u8) -> Setting {
        if bit == 0 {
            self.zero
        } else {
            self.one
        }
    }

    pub fn bit_for(&self, s: Setting) -> u8 {
        if s == self.zero {
            0
        } else {
            1
        }
    }
}

/// Every free parameter of one protocol session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub alpha: BasisParam,
    /// Source visibility.
    pub eta: f64,
    pub n_runs: usize,
    /// Fraction of all runs each party audits in S2(a).
    pub frac_s2a: f64,
    /// Fraction of `L+` audited by Alice in S3(a).
    pub frac_s3a: f64,
    /// Fraction of the pair list audited by Bob in S4(a).
    pub frac_s4a: f64,
    /// Fraction of `R'` audited by Alice in S5(a).
    pub frac_s5a: f64,
    /// Hardy tolerance. Zero selects strict mode, where any zero-cell hit aborts.
    pub epsilon: f64,
    pub detection_z: f64,
    pub seed: u64,
    pub encoding: Encoding,
    /// Alice's bit; drawn from her own stream when absent.
    pub bit: Option<u8>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            alpha: BasisParam::golden(),
            eta: 1.0,
            n_runs: 20_000,
            frac_s2a: 0.10,
            frac_s3a: 0.25,
            frac_s4a: 0.25,
            frac_s5a: 0.25,
            epsilon: 0.0,
            detection_z: 3.0,
            seed: 0,
            encoding: Encoding::default(),
            bit: None,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("frac_s2a", self.frac_s2a),
            ("frac_s3a", self.frac_s3a),
            ("frac_s4a", self.frac_s4a),
            ("frac_s5a", self.frac_s5a),
        ] {
            if !(0.0..1.0).contains(&value) {
                return Err(ConfigError::Fraction { name, value });
            }
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(ConfigError::Visibility(self.eta));
        }
        if self.n_runs == 0 {
            return Err(ConfigError::NoRuns);
        }
        let limit = hardy_q(self.alpha) / 3.0;
        if !(self.epsilon >= 0.0 && self.epsilon < limit) {
            return Err(ConfigError::Epsilon {
                value: self.epsilon,
                limit,
            });
        }
        if !(self.detection_z > 0.0) {
            return Err(ConfigError::DetectionZ(self.detection_z));
        }
        if self.encoding.zero == self.encoding.one {
            return Err(ConfigError::Encoding);
        }
        if let Some(b) = self.bit {
            if b > 1 {
                return Err(ConfigError::Bit(b));
            }
        }
        Ok(())
    }

    /// Strict mode treats every Hardy-zero hit as proof of cheating.
    pub fn strict(&self) -> bool {
        self.epsilon == 0.0
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
