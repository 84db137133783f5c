use std::fmt;

use nalgebra::{Complex, Vector2};
use serde::{Deserialize, Serialize};

use super::{QuantumError, ALGEBRAIC_TOL};

pub type C64 = Complex<f64>;

/// Real overlap parameter of the two measurement bases: `|d> = alpha|u> + beta|u_perp>`.
///
/// Both coefficients are kept real and positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisParamRepr", into = "BasisParamRepr")]
pub struct BasisParam {
    alpha: f64,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct BasisParamRepr {
    alpha: f64,
}

impl TryFrom<BasisParamRepr> for BasisParam {
    type Error = QuantumError;

    fn try_from(r: BasisParamRepr) -> Result<Self, Self::Error> {
        BasisParam::new(r.alpha)
    }
}

impl From<BasisParam> for BasisParamRepr {
    fn from(p: BasisParam) -> Self {
        BasisParamRepr { alpha: p.alpha }
    }
}

impl BasisParam {
    pub fn new(alpha: f64) -> Result<Self, QuantumError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(QuantumError::InvalidAlpha(alpha));
        }
        Ok(Self {
            alpha,
            beta: (1.0 - alpha * alpha).sqrt(),
        })
    }

    pub fn from_alpha_sq(alpha_sq: f64) -> Result<Self, QuantumError> {
        if !(alpha_sq > 0.0 && alpha_sq < 1.0) {
            return Err(QuantumError::InvalidAlpha(alpha_sq));
        }
        // Derive beta from the stored alpha so serialization round-trips exactly.
        Self::new(alpha_sq.sqrt())
    }

    /// The overlap that maximizes the Hardy success probability, `alpha^2 = (sqrt(5) - 1) / 2`.
    pub fn golden() -> Self {
        Self::from_alpha_sq(golden_alpha_sq()).expect("golden ratio lies in (0, 1)")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha * self.alpha
    }
}

pub fn golden_alpha_sq() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// One of the two local observables each party may measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    U,
    D,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::U, Setting::D];

    pub fn complement(self) -> Self {
        match self {
            Setting::U => Setting::D,
            Setting::D => Setting::U,
        }
    }

    /// Position in [`Setting::ALL`].
    pub fn index(self) -> usize {
        match self {
            Setting::U => 0,
            Setting::D => 1,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::U => f.write_str("U"),
            Setting::D => f.write_str("D"),
        }
    }
}

/// A `{-1, +1}`-valued measurement result. Serialized as the integer itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    /// Position in [`Outcome::ALL`].
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.value()
    }
}

impl TryFrom<i8> for Outcome {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(format!("outcome must be +1 or -1, got {other}")),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Plus => f.write_str("+1"),
            Outcome::Minus => f.write_str("-1"),
        }
    }
}

/// Pure single-qubit state in the `{|u>, |u_perp>}` embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit(Vector2<C64>);

impl Qubit {
    pub fn new(amp_u: C64, amp_u_perp: C64) -> Result<Self, QuantumError> {
        let v = Vector2::new(amp_u, amp_u_perp);
        let norm = v.norm_squared();
        if (norm - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(Self(v))
    }

    pub(crate) fn from_real(a: f64, b: f64) -> Self {
        Self(Vector2::new(C64::new(a, 0.0), C64::new(b, 0.0)))
    }

    pub fn amplitudes(&self) -> &Vector2<C64> {
        &self.0
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Qubit) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn overlap_sq(&self, other: &Qubit) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// The four eigenstates of the two observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bases {
    pub u: Qubit,
    pub u_perp: Qubit,
    pub d: Qubit,
    pub d_perp: Qubit,
}

impl Bases {
    pub fn eigenstate(&self, setting: Setting, outcome: Outcome) -> Qubit {
        match (setting, outcome) {
            (Setting::U, Outcome::Plus) => self.u,
            (Setting::U, Outcome::Minus) => self.u_perp,
            (Setting::D, Outcome::Plus) => self.d,
            (Setting::D, Outcome::Minus) => self.d_perp,
        }
    }
}

pub fn build_bases(p: BasisParam) -> Bases {
    let (a, b) = (p.alpha(), p.beta());
    Bases {
        u: Qubit::from_real(1.0, 0.0),
        u_perp: Qubit::from_real(0.0, 1.0),
        d: Qubit::from_real(a, b),
        d_perp: Qubit::from_real(b, -a),
    }
}
