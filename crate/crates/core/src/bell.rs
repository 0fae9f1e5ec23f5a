//! CHSH Bell operators for spin-1 measurements and their correlation-matrix
//! form `K(M) = sum_ij M_ij S_i (x) S_j`.

use nalgebra::Matrix3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_asymmetry, kron, CMatrix};
use crate::spin::{generator_matrices, spin_along, UnitVector3};

/// The four measurement directions, `a`, `a'` for party A and `b`, `b'`
/// for party B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementScenario {
    pub a: UnitVector3,
    pub a_prime: UnitVector3,
    pub b: UnitVector3,
    pub b_prime: UnitVector3,
}

impl MeasurementScenario {
    pub fn new(a: UnitVector3, a_prime: UnitVector3, b: UnitVector3, b_prime: UnitVector3) -> Self {
        Self { a, a_prime, b, b_prime }
    }

    /// All four directions along `z`; `B = 2 S_z (x) S_z`.
    pub fn aligned_z() -> Self {
        let z = UnitVector3::Z;
        Self::new(z, z, z, z)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::new(
            UnitVector3::random(rng),
            UnitVector3::random(rng),
            UnitVector3::random(rng),
            UnitVector3::random(rng),
        )
    }

    pub fn directions(&self) -> [UnitVector3; 4] {
        [self.a, self.a_prime, self.b, self.b_prime]
    }
}

/// Real 3x3 matrix coupling the two parties' spin generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationMatrix(Matrix3<f64>);

impl CorrelationMatrix {
    /// Any real matrix; `K(M)` is defined for all of them.
    pub fn from_matrix(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

/// Hermitian, traceless operator on the two-party space.
#[derive(Debug, Clone, PartialEq)]
pub struct BellOperator(CMatrix);

impl BellOperator {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let asymmetry = hermitian_asymmetry(&m);
        if asymmetry > 1e-12 {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }
}

/// `M = a (b + b')^T + a' (b - b')^T`.
pub fn correlation_matrix(sc: &MeasurementScenario) -> CorrelationMatrix {
    let (a, ap) = (sc.a.vector(), sc.a_prime.vector());
    let (b, bp) = (sc.b.vector(), sc.b_prime.vector());
    CorrelationMatrix(a * (b + bp).transpose() + ap * (b - bp).transpose())
}

/// `K(M) = sum_ij M_ij S_i (x) S_j` with `(S_1, S_2, S_3) = (S_x, S_y, S_z)`.
pub fn coupling_operator(m: &Matrix3<f64>) -> BellOperator {
    let g = generator_matrices();
    let mut k = CMatrix::zeros(9, 9);
    for i in 0..3 {
        for j in 0..3 {
            if m[(i, j)] != 0.0 {
                k += kron(&g[i], &g[j]).scale(m[(i, j)]);
            }
        }
    }
    BellOperator(k)
}

/// Four-term CHSH combination for an arbitrary local observable map.
pub fn chsh_operator_with(sc: &MeasurementScenario, observable: impl Fn(&UnitVector3) -> CMatrix) -> CMatrix {
    let (a, ap) = (observable(&sc.a), observable(&sc.a_prime));
    let (b, bp) = (observable(&sc.b), observable(&sc.b_prime));
    kron(&a, &b) + kron(&a, &bp) + kron(&ap, &b) - kron(&ap, &bp)
}

/// `S(a) (x) S(b) + S(a) (x) S(b') + S(a') (x) S(b) - S(a') (x) S(b')`.
pub fn bell_operator(sc: &MeasurementScenario) -> BellOperator {
    BellOperator(chsh_operator_with(sc, |u| spin_along(u).into_matrix()))
}

/// `H_{s,t} = s S_x (x) S_x + t S_z (x) S_z`.
pub fn reduced_operator(s: f64, t: f64) -> BellOperator {
    let [sx, _, sz] = generator_matrices();
    BellOperator(kron(&sx, &sx).scale(s) + kron(&sz, &sz).scale(t))
}
