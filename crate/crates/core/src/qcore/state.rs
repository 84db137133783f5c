use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use super::basis::{build_bases, BasisParam, Bases, Outcome, Qubit, Setting, C64};
use super::{QuantumError, ALGEBRAIC_TOL, EIGEN_TOL};

/// Probability of projecting a two-qubit state onto a product `|x>|y>`.
///
/// The first factor belongs to Alice, the second to Bob.
pub trait BornRule {
    fn product_probability(&self, x: &Qubit, y: &Qubit) -> f64;
}

fn kron(x: &Qubit, y: &Qubit) -> Vector4<C64> {
    let (x, y) = (x.amplitudes(), y.amplitudes());
    Vector4::new(x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState2Q(Vector4<C64>);

impl PureState2Q {
    pub fn new(amplitudes: Vector4<C64>) -> Result<Self, QuantumError> {
        let n = amplitudes.norm_squared();
        if (n - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(QuantumError::NotNormalized(n));
        }
        Ok(Self(amplitudes))
    }

    pub fn product(x: &Qubit, y: &Qubit) -> Self {
        Self(kron(x, y))
    }

    pub fn amplitudes(&self) -> &Vector4<C64> {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    /// `<x y|psi>`
    pub fn project(&self, x: &Qubit, y: &Qubit) -> C64 {
        kron(x, y).dotc(&self.0)
    }

    pub fn to_density(&self) -> DensityMatrix2Q {
        DensityMatrix2Q(self.0 * self.0.adjoint())
    }
}

impl BornRule for PureState2Q {
    fn product_probability(&self, x: &Qubit, y: &Qubit) -> f64 {
        self.project(x, y).norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix2Q(Matrix4<C64>);

impl DensityMatrix2Q {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: Matrix4<C64>) -> Result<Self, QuantumError> {
        let herm_err = (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm_err > ALGEBRAIC_TOL {
            return Err(QuantumError::NotHermitian(herm_err));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > ALGEBRAIC_TOL || tr.im.abs() > ALGEBRAIC_TOL {
            return Err(QuantumError::BadTrace(tr.re));
        }
        let rho = Self(m);
        let min = rho.min_eigenvalue();
        if min < -EIGEN_TOL {
            return Err(QuantumError::NotPositive(min));
        }
        Ok(rho)
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4::identity() * C64::new(0.25, 0.0))
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Measures Alice's half in `setting` and returns, for each outcome,
    /// its probability and Bob's normalized conditional state.
    pub fn measure_first(&self, bases: &Bases, setting: Setting) -> [(f64, LocalState); 2] {
        Outcome::ALL.map(|o| {
            let x = bases.eigenstate(setting, o);
            let xa = x.amplitudes();
            // Bob's unnormalized conditional state: <x|_A rho |x>_A.
            let mut sigma = Matrix2::<C64>::zeros();
            for (j, k) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..2 {
                    for l in 0..2 {
                        acc += xa[i].conj() * self.0[(2 * i + j, 2 * l + k)] * xa[l];
                    }
                }
                sigma[(j, k)] = acc;
            }
            let prob = sigma.trace().re.max(0.0);
            let local = if prob > 0.0 {
                LocalState::from_matrix(&(sigma / C64::new(prob, 0.0)))
            } else {
                LocalState::maximally_mixed()
            };
            (prob, local)
        })
    }
}

impl BornRule for DensityMatrix2Q {
    fn product_probability(&self, x: &Qubit, y: &Qubit) -> f64 {
        let v = kron(x, y);
        (v.adjoint() * self.0 * v)[(0, 0)].re
    }
}

/// `c1|d>|u_perp> + c2|d_perp>|u> + c3|d_perp>|u_perp>` with real positive alpha and beta.
pub fn hardy_state(p: BasisParam) -> PureState2Q {
    let b = build_bases(p);
    let (alpha, beta) = (p.alpha(), p.beta());
    let a2 = alpha * alpha;
    let n = (1.0 - a2 * a2).sqrt();
    let c1 = -beta / n;
    let c2 = beta * a2 / n;
    let c3 = alpha * beta * beta / n;
    let amps = kron(&b.d, &b.u_perp) * C64::new(c1, 0.0)
        + kron(&b.d_perp, &b.u) * C64::new(c2, 0.0)
        + kron(&b.d_perp, &b.u_perp) * C64::new(c3, 0.0);
    PureState2Q(amps)
}

/// Success probability of the Hardy argument, `alpha^4 beta^2 / (1 + alpha^2)`.
pub fn hardy_q(p: BasisParam) -> f64 {
    let a2 = p.alpha_sq();
    a2 * a2 * (1.0 - a2) / (1.0 + a2)
}

/// Hardy state mixed with white noise at visibility `eta`.
pub fn werner_state(p: BasisParam, eta: f64) -> Result<DensityMatrix2Q, QuantumError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(QuantumError::InvalidVisibility(eta));
    }
    let pure = hardy_state(p).to_density();
    let m = pure.0 * C64::new(eta, 0.0)
        + Matrix4::<C64>::identity() * C64::new((1.0 - eta) / 4.0, 0.0);
    Ok(DensityMatrix2Q(m))
}

/// A possibly mixed single-qubit state stored as its Bloch vector.
///
/// This is the representation of every qubit that physically changes hands in
/// the protocol: Bob's halves of the source pairs and Alice's measured qubits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalState(pub [f64; 3]);

impl LocalState {
    pub fn maximally_mixed() -> Self {
        Self([0.0; 3])
    }

    pub fn from_qubit(q: &Qubit) -> Self {
        let a = q.amplitudes();
        let rho01 = a[0] * a[1].conj();
        Self([
            2.0 * rho01.re,
            -2.0 * rho01.im,
            a[0].norm_sqr() - a[1].norm_sqr(),
        ])
    }

    fn from_matrix(m: &Matrix2<C64>) -> Self {
        Self([
            2.0 * m[(0, 1)].re,
            -2.0 * m[(0, 1)].im,
            m[(0, 0)].re - m[(1, 1)].re,
        ])
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.0
    }

    /// `<x|rho|x>` for a pure `x`.
    pub fn overlap(&self, x: &Qubit) -> f64 {
        let n = LocalState::from_qubit(x).0;
        let dot: f64 = self.0.iter().zip(n.iter()).map(|(a, b)| a * b).sum();
        ((1.0 + dot) / 2.0).clamp(0.0, 1.0)
    }

    pub fn is_close(&self, other: &LocalState, tol: f64) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| (a - b).abs() <= tol)
    }
}

impl From<Qubit> for LocalState {
    fn from(q: Qubit) -> Self {
        LocalState::from_qubit(&q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hardy_norm_and_missing_component() {
        for a2 in [0.05, 0.3, 0.5, super::super::golden_alpha_sq(), 0.95] {
            let p = BasisParam::from_alpha_sq(a2).unwrap();
            let psi = hardy_state(p);
            assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
            let b = build_bases(p);
            assert!(psi.project(&b.d, &b.u).norm() < 1e-12);
        }
    }

    #[test]
    fn werner_limits() {
        let p = BasisParam::golden();
        let pure = werner_state(p, 1.0).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-12);
        let mixed = werner_state(p, 0.0).unwrap();
        assert!((mixed.purity() - 0.25).abs() < 1e-12);
        assert!(werner_state(p, 1.01).is_err());
        assert!(werner_state(p, -0.01).is_err());
    }

    #[test]
    fn werner_is_valid_density_matrix() {
        let p = BasisParam::golden();
        for eta in [0.0, 0.3, 0.9, 1.0] {
            let rho = werner_state(p, eta).unwrap();
            DensityMatrix2Q::new(*rho.matrix()).unwrap();
        }
    }

    #[test]
    fn rejects_non_physical_matrix() {
        let mut m = Matrix4::<C64>::zeros();
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(matches!(DensityMatrix2Q::new(m), Err(QuantumError::NotPositive(_))));
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix2Q::new(m), Err(QuantumError::NotHermitian(_))));
    }

    #[test]
    fn bloch_overlaps() {
        let b = build_bases(BasisParam::golden());
        let s = LocalState::from(b.u_perp);
        assert!((s.overlap(&b.d_perp) - BasisParam::golden().alpha_sq()).abs() < 1e-12);
        assert!((LocalState::maximally_mixed().overlap(&b.d) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn conditional_states_reproduce_joint() {
        let p = BasisParam::golden();
        let b = build_bases(p);
        let rho = werner_state(p, 0.8).unwrap();
        for sa in Setting::ALL {
            let branches = rho.measure_first(&b, sa);
            for (oa, (prob, local)) in Outcome::ALL.iter().zip(branches.iter()) {
                for sb in Setting::ALL {
                    let y = b.eigenstate(sb, Outcome::Plus);
                    let x = b.eigenstate(sa, *oa);
                    let joint = rho.product_probability(&x, &y);
                    assert!((prob * local.overlap(&y) - joint).abs() < 1e-12);
                }
            }
        }
    }
}
