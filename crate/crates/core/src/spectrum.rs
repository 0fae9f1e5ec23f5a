//! Closed-form and numerical spectra of `H_{s,t}` and of general Bell
//! operators, plus the `V4 (+) V5` invariant-subspace decomposition.
//!
//! Product basis index of `|m, n>` is `3 * idx(m) + idx(n)` with
//! `idx(1) = 0, idx(0) = 1, idx(-1) = 2`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix3, Matrix4, SVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::reduced_operator;
use crate::error::{Error, Result};
use crate::linalg::{complexify, CMatrix, HermitianEigen};
use crate::tolerance::DEFAULT;

/// `|1,0>, |0,1>, |0,-1>, |-1,0>`.
pub const V4_INDICES: [usize; 4] = [1, 3, 5, 7];
/// `|1,1>, |1,-1>, |0,0>, |-1,1>, |-1,-1>`.
pub const V5_INDICES: [usize; 5] = [0, 2, 4, 6, 8];

const KET_11: usize = 0;
const KET_1M: usize = 2;
const KET_00: usize = 4;
const KET_M1: usize = 6;
const KET_MM: usize = 8;

pub type ProductVector = SVector<f64, 9>;

/// Ascending eigenvalues with the largest absolute value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub operator_norm: f64,
}

impl SpectrumResult {
    fn from_sorted(eigenvalues: Vec<f64>) -> Self {
        let operator_norm = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Self {
            eigenvalues,
            operator_norm,
        }
    }

    /// Largest elementwise distance between two sorted spectra.
    pub fn max_abs_difference(&self, other: &SpectrumResult) -> f64 {
        if self.eigenvalues.len() != other.eigenvalues.len() {
            return f64::INFINITY;
        }
        self.eigenvalues
            .iter()
            .zip(&other.eigenvalues)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

/// Numerical spectrum of a Hermitian matrix of any dimension.
pub fn eig_hermitian(a: &CMatrix) -> Result<SpectrumResult> {
    let eig = HermitianEigen::new(a, DEFAULT.hermitian)?;
    Ok(SpectrumResult::from_sorted(eig.values))
}

/// `{0, 0, 0, +-s, +-t, +-sqrt(s^2 + t^2)}`, sorted.
pub fn closed_form_spectrum(s: f64, t: f64) -> Result<SpectrumResult> {
    check_params(s, t)?;
    let r = s.hypot(t);
    let mut values = vec![0.0, 0.0, 0.0, s, -s, t, -t, r, -r];
    values.sort_by(f64::total_cmp);
    Ok(SpectrumResult {
        eigenvalues: values,
        operator_norm: r,
    })
}

fn check_params(s: f64, t: f64) -> Result<()> {
    if !(s >= 0.0 && t >= 0.0) || !s.is_finite() || !t.is_finite() {
        return Err(Error::NegativeParameter { s, t });
    }
    Ok(())
}

/// Block structure of `H_{s,t}` on `V4` and `V5`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBlocks {
    /// In the ordered basis of `V4_INDICES`.
    pub v4_block: Matrix4<f64>,
    /// `(|1,1> - |-1,-1>, t)` and `(|1,-1> - |-1,1>, -t)`, unnormalized.
    pub v5_t_eigenpairs: [(ProductVector, f64); 2],
    /// In the orthonormal basis `w_basis()`.
    pub w_block: Matrix3<f64>,
}

/// `w1 = (|1,1> + |-1,-1>)/sqrt2`, `w2 = (|1,-1> + |-1,1>)/sqrt2`, `w3 = |0,0>`.
pub fn w_basis() -> [ProductVector; 3] {
    let mut w1 = ProductVector::zeros();
    w1[KET_11] = FRAC_1_SQRT_2;
    w1[KET_MM] = FRAC_1_SQRT_2;
    let mut w2 = ProductVector::zeros();
    w2[KET_1M] = FRAC_1_SQRT_2;
    w2[KET_M1] = FRAC_1_SQRT_2;
    let mut w3 = ProductVector::zeros();
    w3[KET_00] = 1.0;
    [w1, w2, w3]
}

pub fn subspace_blocks(s: f64, t: f64) -> SubspaceBlocks {
    let h = s / 2.0;
    #[rustfmt::skip]
    let v4_block = Matrix4::new(
        0.0, h, h, 0.0,
        h, 0.0, 0.0, h,
        h, 0.0, 0.0, h,
        0.0, h, h, 0.0,
    );

    let mut u1 = ProductVector::zeros();
    u1[KET_11] = 1.0;
    u1[KET_MM] = -1.0;
    let mut u2 = ProductVector::zeros();
    u2[KET_1M] = 1.0;
    u2[KET_M1] = -1.0;

    let c = s * FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let w_block = Matrix3::new(
        t, 0.0, c,
        0.0, -t, c,
        c, c, 0.0,
    );

    SubspaceBlocks {
        v4_block,
        v5_t_eigenpairs: [(u1, t), (u2, -t)],
        w_block,
    }
}

impl SubspaceBlocks {
    /// Reassemble the 9x9 real operator from the three blocks.
    pub fn embed(&self) -> nalgebra::SMatrix<f64, 9, 9> {
        let mut full = nalgebra::SMatrix::<f64, 9, 9>::zeros();
        for (i, &p) in V4_INDICES.iter().enumerate() {
            for (j, &q) in V4_INDICES.iter().enumerate() {
                full[(p, q)] += self.v4_block[(i, j)];
            }
        }
        for (u, lambda) in &self.v5_t_eigenpairs {
            full += u * u.transpose() * (*lambda / u.norm_squared());
        }
        let w = w_basis();
        for i in 0..3 {
            for j in 0..3 {
                full += w[i] * w[j].transpose() * self.w_block[(i, j)];
            }
        }
        full
    }
}

/// Off-block norms `|| P5 H P4 ||_F` and `|| P4 H P5 ||_F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub v5_from_v4: f64,
    pub v4_from_v5: f64,
}

impl InvarianceReport {
    pub fn max(&self) -> f64 {
        self.v5_from_v4.max(self.v4_from_v5)
    }
}

pub fn verify_invariance(s: f64, t: f64) -> InvarianceReport {
    let h = reduced_operator(s, t);
    let projector = |idx: &[usize]| {
        let mut p = nalgebra::DMatrix::<f64>::zeros(9, 9);
        idx.iter().for_each(|&k| p[(k, k)] = 1.0);
        complexify(&p)
    };
    let p4 = projector(&V4_INDICES);
    let p5 = projector(&V5_INDICES);
    InvarianceReport {
        v5_from_v4: (&p5 * h.matrix() * &p4).norm(),
        v4_from_v5: (&p4 * h.matrix() * &p5).norm(),
    }
}

/// One row of an `(s, t)` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub s: f64,
    pub t: f64,
    pub eigenvalues: Vec<f64>,
    pub norm: f64,
}

/// Numerical spectra of `H_{s,t}` on an `n x n` grid over `[0, max]^2`,
/// row-major in `s`.
pub fn grid_sweep(n: usize, max: f64) -> Result<Vec<GridRow>> {
    if n < 2 {
        return Err(Error::Config(format!("grid size must be at least 2, got {n}")));
    }
    let step = max / (n - 1) as f64;
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (s, t) = ((k / n) as f64 * step, (k % n) as f64 * step);
            let spec = eig_hermitian(reduced_operator(s, t).matrix())?;
            Ok(GridRow {
                s,
                t,
                eigenvalues: spec.eigenvalues,
                norm: spec.operator_norm,
            })
        })
        .collect()
}

/// CSV with header `s,t,lambda1..lambda9,norm`.
pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::from("s,t,lambda1,lambda2,lambda3,lambda4,lambda5,lambda6,lambda7,lambda8,lambda9,norm\n");
    for row in rows {
        let mut fields = vec![row.s, row.t];
        fields.extend(&row.eigenvalues);
        fields.push(row.norm);
        let line: Vec<String> = fields.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
