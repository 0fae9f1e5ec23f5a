//! Spin-1 matrices, directional observables `S(u)` and the spin-1
//! representation of SO(3).
//!
//! Basis ordering throughout the crate is the `S_z` eigenbasis
//! `|1>, |0>, |-1>`, so `S_z = diag(1, 0, -1)`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix3, Vector3, Vector4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianEigen, ZERO};
use crate::tolerance::DEFAULT;

/// A direction in R^3 with unit Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector3(Vector3<f64>);

impl UnitVector3 {
    pub const Z: UnitVector3 = UnitVector3(Vector3::new(0.0, 0.0, 1.0));

    /// Accepts components whose norm is within the normalization tolerance
    /// of 1, then rescales to unit norm exactly.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::with_tolerance(Vector3::new(x, y, z), DEFAULT.normalization)
    }

    pub fn with_tolerance(v: Vector3<f64>, tol: f64) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > tol {
            return Err(Error::Normalization { norm, tol });
        }
        Ok(Self(v / norm))
    }

    /// Normalizes any nonzero finite vector.
    pub fn normalize(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Normalization {
                norm,
                tol: f64::INFINITY,
            });
        }
        Ok(Self(v / norm))
    }

    /// Uniform on the sphere via a normalized isotropic Gaussian.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = Vector3::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            if let Ok(u) = Self::normalize(v) {
                if v.norm() > 1e-8 {
                    return u;
                }
            }
        }
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.0
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }
}

impl TryFrom<[f64; 3]> for UnitVector3 {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<UnitVector3> for [f64; 3] {
    fn from(u: UnitVector3) -> Self {
        u.to_array()
    }
}

impl std::ops::Neg for UnitVector3 {
    type Output = UnitVector3;

    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// Element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        Self::with_tolerance(m, DEFAULT.rotation)
    }

    pub fn with_tolerance(m: Matrix3<f64>, tol: f64) -> Result<Self> {
        let orthogonality = (m.transpose() * m - Matrix3::identity()).norm();
        let det = m.determinant();
        if !(orthogonality <= tol && (det - 1.0).abs() <= tol) {
            return Err(Error::NotRotation { orthogonality, det });
        }
        Ok(Self(m))
    }

    /// Rodrigues' formula.
    pub fn from_axis_angle(axis: &UnitVector3, angle: f64) -> Self {
        let n = axis.vector();
        let k = n.cross_matrix();
        Self(Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos()))
    }

    /// Haar-random rotation from a normalized Gaussian quaternion.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let q = loop {
            let q = Vector4::<f64>::from_fn(|_, _| rng.sample(StandardNormal));
            let n = q.norm();
            if n > 1e-8 {
                break q / n;
            }
        };
        let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
        Self(Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, u: &UnitVector3) -> UnitVector3 {
        UnitVector3(self.0 * u.vector())
    }

    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        Rotation3(self.0 * other.0)
    }
}

/// Hermitian 3x3 observable built from the spin-1 generators.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinObservable(CMatrix);

impl SpinObservable {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

/// `[S_x, S_y, S_z]` as plain matrices.
pub fn generator_matrices() -> [CMatrix; 3] {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let hi = Complex64::new(0.0, FRAC_1_SQRT_2);
    let one = Complex64::new(1.0, 0.0);
    #[rustfmt::skip]
    let sx = CMatrix::from_row_slice(3, 3, &[
        ZERO, h, ZERO,
        h, ZERO, h,
        ZERO, h, ZERO,
    ]);
    #[rustfmt::skip]
    let sy = CMatrix::from_row_slice(3, 3, &[
        ZERO, -hi, ZERO,
        hi, ZERO, -hi,
        ZERO, hi, ZERO,
    ]);
    #[rustfmt::skip]
    let sz = CMatrix::from_row_slice(3, 3, &[
        one, ZERO, ZERO,
        ZERO, ZERO, ZERO,
        ZERO, ZERO, -one,
    ]);
    [sx, sy, sz]
}

pub fn spin_generators() -> (SpinObservable, SpinObservable, SpinObservable) {
    let [sx, sy, sz] = generator_matrices();
    (SpinObservable(sx), SpinObservable(sy), SpinObservable(sz))
}

/// `v_x S_x + v_y S_y + v_z S_z` for an arbitrary real vector.
pub fn spin_linear(v: &Vector3<f64>) -> CMatrix {
    let g = generator_matrices();
    g[0].scale(v.x) + g[1].scale(v.y) + g[2].scale(v.z)
}

pub fn spin_along(u: &UnitVector3) -> SpinObservable {
    SpinObservable(spin_linear(&u.vector()))
}

/// Axis and angle of a rotation, angle in `[0, pi]`.
///
/// The null rotation reports the `z` axis. Near `pi` the axis comes from the
/// symmetric part; at exactly `pi` its sign is chosen so the first nonzero
/// component is positive.
pub fn axis_angle(r: &Rotation3) -> (UnitVector3, f64) {
    let m = r.matrix();
    // 2 sin(theta) n
    let w = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    let cos2 = m.trace() - 1.0; // 2 cos(theta)
    let angle = w.norm().atan2(cos2);
    if angle < 1e-12 {
        return (UnitVector3::Z, 0.0);
    }
    if angle < std::f64::consts::PI - 1e-6 {
        return (UnitVector3(w / w.norm()), angle);
    }

    // n n^T = (sym - cos I) / (1 - cos)
    let cos = cos2 / 2.0;
    let sym = (m + m.transpose()) / 2.0;
    let outer = (sym - Matrix3::identity() * cos) / (1.0 - cos);
    let k = (0..3)
        .max_by(|&i, &j| outer[(i, i)].total_cmp(&outer[(j, j)]))
        .unwrap_or(2);
    let mut n = outer.column(k).into_owned();
    n /= n.norm();
    if w.norm() > 1e-14 {
        if n.dot(&w) < 0.0 {
            n = -n;
        }
    } else if let Some(first) = n.iter().copied().find(|c| c.abs() > 1e-12) {
        if first < 0.0 {
            n = -n;
        }
    }
    (UnitVector3(n), angle)
}

/// `exp(-i theta S(n))` with `(n, theta) = axis_angle(r)`, computed from the
/// eigendecomposition of `S(n)`.
///
/// Only the conjugation action `U S(u) U^dagger = S(R u)` is meaningful; the
/// global phase is whatever this construction produces.
pub fn spin_representation(r: &Rotation3) -> CMatrix {
    let (axis, angle) = axis_angle(r);
    hermitian_exp(spin_along(&axis).matrix(), -angle)
}

/// `exp(i c H)` for Hermitian `H` via eigendecomposition.
pub fn hermitian_exp(h: &CMatrix, c: f64) -> CMatrix {
    let eig = HermitianEigen::new(h, DEFAULT.hermitian).expect("spin generator combinations are Hermitian");
    eig.apply_fn(|lambda| Complex64::from_polar(1.0, c * lambda))
}
