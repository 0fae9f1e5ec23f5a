//! Small dense complex linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Kronecker product with the first factor as the major (slow) index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Frobenius norm of `A - A^dagger`.
pub fn hermitian_asymmetry(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Lift a real matrix into the complex field.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted
/// ascending. Column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(a: &CMatrix, tol: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let asymmetry = hermitian_asymmetry(a);
        if asymmetry > tol {
            return Err(Error::NotHermitian { asymmetry });
        }
        let sym = (a + a.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym);
        let n = a.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            fix_phase(&mut col);
            vectors.set_column(dst, &col);
        }
        Ok(Self { values, vectors })
    }

    /// `V diag(f(lambda)) V^dagger`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let n = self.values.len();
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(n, self.values.iter().map(|&v| f(v))));
        &self.vectors * diag * self.vectors.adjoint()
    }

    /// `|| A V - V Lambda ||_F` for the matrix this decomposition came from.
    pub fn residual(&self, a: &CMatrix) -> f64 {
        let lambda = CMatrix::from_diagonal(&CVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        (a * &self.vectors - &self.vectors * lambda).norm()
    }
}

/// Rotate the global phase of `v` so its largest-magnitude entry is real
/// and positive (lowest index wins ties).
pub fn fix_phase(v: &mut CVector) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (k, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_abs + 1e-12 {
            best = k;
            best_abs = m;
        }
    }
    if best_abs > 0.0 {
        let phase = v[best].conj() / best_abs;
        v.iter_mut().for_each(|z| *z *= phase);
    }
}
