//! Special-orthogonal SVD reduction `R M Q^T = diag(s, 0, t)` of rank-2
//! correlation matrices.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bell::{correlation_matrix, reduced_operator, BellOperator, CorrelationMatrix, MeasurementScenario};
use crate::error::{Error, Result};
use crate::spin::Rotation3;
use crate::tolerance::DEFAULT;

const JACOBI_MAX_SWEEPS: usize = 64;

/// `o1 * M * o2^T = diag(sigma)` with `sigma` descending and `o1`, `o2`
/// orthogonal (determinant not fixed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Svd3 {
    pub o1: Matrix3<f64>,
    pub o2: Matrix3<f64>,
    pub sigma: [f64; 3],
}

/// One-sided Jacobi SVD of a real 3x3 matrix.
///
/// Rows of `o1` are the left singular vectors; each has its largest-magnitude
/// entry made positive (the matching row of `o2` is flipped with it).
pub fn svd3(m: &Matrix3<f64>) -> Svd3 {
    let mut a = *m;
    let mut v = Matrix3::<f64>::identity();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let alpha = a.column(p).norm_squared();
            let beta = a.column(q).norm_squared();
            let gamma = a.column(p).dot(&a.column(q));
            if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let tan = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let cos = 1.0 / (1.0 + tan * tan).sqrt();
            let sin = cos * tan;
            for target in [&mut a, &mut v] {
                let cp = target.column(p).into_owned();
                let cq = target.column(q).into_owned();
                target.set_column(p, &(cp * cos - cq * sin));
                target.set_column(q, &(cp * sin + cq * cos));
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..3).map(|k| a.column(k).norm()).collect();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma = [norms[order[0]], norms[order[1]], norms[order[2]]];

    // Left singular vectors: normalized columns of A V, completed to an
    // orthonormal basis where the singular value is negligible.
    let scale = sigma[0].max(f64::MIN_POSITIVE);
    let mut u_cols: Vec<Vector3<f64>> = Vec::with_capacity(3);
    for (slot, &k) in order.iter().enumerate() {
        let mut col = if sigma[slot] > 1e-13 * scale {
            a.column(k).into_owned()
        } else {
            completion_candidate(&u_cols)
        };
        for prev in &u_cols {
            col -= prev * prev.dot(&col);
        }
        let n = col.norm();
        col = if n > 1e-8 {
            col / n
        } else {
            completion_candidate(&u_cols)
        };
        u_cols.push(col);
    }

    let mut o1 = Matrix3::zeros();
    let mut o2 = Matrix3::zeros();
    for (slot, &k) in order.iter().enumerate() {
        let mut left = u_cols[slot];
        let mut right = v.column(k).into_owned();
        let peak = left
            .iter()
            .copied()
            .max_by(|x, y| x.abs().total_cmp(&y.abs()))
            .unwrap_or(0.0);
        if peak < 0.0 {
            left = -left;
            right = -right;
        }
        o1.set_row(slot, &left.transpose());
        o2.set_row(slot, &right.transpose());
    }
    Svd3 { o1, o2, sigma }
}

/// A unit vector orthogonal to every vector in `basis` (at most two).
fn completion_candidate(basis: &[Vector3<f64>]) -> Vector3<f64> {
    match basis {
        [u, w] => u.cross(w).normalize(),
        _ => {
            let mut best = Vector3::x();
            let mut best_norm = -1.0;
            for e in [Vector3::x(), Vector3::y(), Vector3::z()] {
                let mut c = e;
                for b in basis {
                    c -= b * b.dot(&c);
                }
                if c.norm() > best_norm + 1e-12 {
                    best_norm = c.norm();
                    best = c;
                }
            }
            best.normalize()
        }
    }
}

/// `J = diag(1, 1, -1)`; fixes a determinant without touching
/// `diag(s, t, 0)`.
fn reflection_j() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))
}

/// The rotation with `P diag(s, t, 0) P^T = diag(s, 0, t)`.
fn permutation_p() -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0)
}

/// Certificate that `R M Q^T = diag(s, 0, t)` with `R, Q` in SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalReduction {
    pub r: Rotation3,
    pub q: Rotation3,
    pub s: f64,
    pub t: f64,
}

impl CanonicalReduction {
    pub fn canonical_form(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(self.s, 0.0, self.t))
    }

    /// `|| R M Q^T - diag(s, 0, t) ||_F`.
    pub fn residual(&self, m: &Matrix3<f64>) -> f64 {
        (self.r.matrix() * m * self.q.matrix().transpose() - self.canonical_form()).norm()
    }

    pub fn certificate(&self, m: &Matrix3<f64>) -> ReductionCertificate {
        ReductionCertificate {
            r: rows(self.r.matrix()),
            q: rows(self.q.matrix()),
            s: self.s,
            t: self.t,
            reconstruction_residual: self.residual(m),
            det_r_residual: (self.r.matrix().determinant() - 1.0).abs(),
            det_q_residual: (self.q.matrix().determinant() - 1.0).abs(),
            sum_of_squares: self.s * self.s + self.t * self.t,
        }
    }
}

/// JSON form of a `CanonicalReduction` with its residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionCertificate {
    #[serde(rename = "R")]
    pub r: [[f64; 3]; 3],
    #[serde(rename = "Q")]
    pub q: [[f64; 3]; 3],
    pub s: f64,
    pub t: f64,
    pub reconstruction_residual: f64,
    pub det_r_residual: f64,
    pub det_q_residual: f64,
    pub sum_of_squares: f64,
}

pub fn rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]])
}

pub fn from_rows(r: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| r[i][j])
}

/// Reduce a rank-2 matrix to `diag(s, 0, t)` with `s >= t >= 0`.
///
/// SVD gives `O1 M O2^T = diag(s, t, 0)`. Any factor with determinant -1 is
/// replaced by `J O`, which leaves the diagonal unchanged because its third
/// entry vanishes. Conjugating by `P` then moves `t` to the last slot.
pub fn canonical_reduction(m: &CorrelationMatrix) -> Result<CanonicalReduction> {
    canonical_reduction_with(m.matrix(), DEFAULT.rank)
}

pub fn canonical_reduction_with(m: &Matrix3<f64>, rank_tol: f64) -> Result<CanonicalReduction> {
    let svd = svd3(m);
    let sigma3 = svd.sigma[2];
    if sigma3.is_nan() || sigma3 >= rank_tol {
        return Err(Error::RankViolation { sigma3 });
    }
    let j = reflection_j();
    let fix = |o: Matrix3<f64>| if o.determinant() < 0.0 { j * o } else { o };
    let (r0, q0) = (fix(svd.o1), fix(svd.o2));
    let p = permutation_p();
    Ok(CanonicalReduction {
        r: Rotation3::new(p * r0)?,
        q: Rotation3::new(p * q0)?,
        s: svd.sigma[0],
        t: svd.sigma[1],
    })
}

/// `(s, t, H_{s,t})` for the scenario's correlation matrix.
pub fn reduced_bell(sc: &MeasurementScenario) -> Result<(f64, f64, BellOperator)> {
    let red = canonical_reduction(&correlation_matrix(sc))?;
    Ok((red.s, red.t, reduced_operator(red.s, red.t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{bell_operator, coupling_operator};
    use crate::linalg::{kron, HermitianEigen};
    use crate::spin::{spin_representation, UnitVector3};
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        Matrix3::from_fn(|_, _| rng.random_range(-2.0..2.0))
    }

    fn random_rank2(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let x = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let y = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let z = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let w = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        x * y.transpose() + z * w.transpose()
    }

    fn assert_orthogonal(o: &Matrix3<f64>) {
        assert!((o.transpose() * o - Matrix3::identity()).norm() < 1e-12);
    }

    #[test]
    fn svd_of_diagonal_and_zero() {
        let d = Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 0.0));
        let svd = svd3(&d);
        assert_eq!(svd.sigma, [2.0, 1.0, 0.0]);
        assert_eq!(svd.o1, Matrix3::identity());
        assert_eq!(svd.o2, Matrix3::identity());

        let svd = svd3(&Matrix3::zeros());
        assert_eq!(svd.sigma, [0.0, 0.0, 0.0]);
        assert_orthogonal(&svd.o1);
    }

    #[test]
    fn svd_reconstructs_random_matrices_and_matches_gram_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for k in 0..5000 {
            let m = if k % 2 == 0 {
                random_matrix(&mut rng)
            } else {
                random_rank2(&mut rng)
            };
            let svd = svd3(&m);
            assert!(svd.sigma[0] >= svd.sigma[1] && svd.sigma[1] >= svd.sigma[2] && svd.sigma[2] >= 0.0);
            assert_orthogonal(&svd.o1);
            assert_orthogonal(&svd.o2);
            let d = Matrix3::from_diagonal(&Vector3::from(svd.sigma));
            assert!((svd.o1 * m * svd.o2.transpose() - d).norm() < 1e-11);
            assert!((svd.o1.transpose() * d * svd.o2 - m).norm() < 1e-10);

            // oracle: sqrt of eigenvalues of M^T M
            let gram = SymmetricEigen::new(m.transpose() * m);
            let mut ev: Vec<f64> = gram.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
            ev.sort_by(|x, y| y.total_cmp(x));
            for (a, b) in ev.iter().zip(svd.sigma) {
                assert!((a - b).abs() < 1e-7 * (1.0 + b), "{ev:?} vs {:?}", svd.sigma);
            }
        }
    }

    #[test]
    fn svd_sign_convention_left_vectors_peak_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let svd = svd3(&random_matrix(&mut rng));
            for i in 0..3 {
                let row = svd.o1.row(i);
                let peak = row.iter().copied().max_by(|x, y| x.abs().total_cmp(&y.abs())).unwrap();
                assert!(peak > 0.0);
            }
        }
    }

    #[test]
    fn svd_rank_one_and_repeated_values() {
        let u = Vector3::new(1.0, 2.0, -2.0) / 3.0;
        let v = Vector3::new(0.0, 0.6, 0.8);
        let m = u * v.transpose() * 2.0;
        let svd = svd3(&m);
        assert!((svd.sigma[0] - 2.0).abs() < 1e-14);
        assert!(svd.sigma[1] < 1e-14);
        assert_orthogonal(&svd.o1);
        assert_orthogonal(&svd.o2);

        let r = Rotation3::from_axis_angle(&UnitVector3::normalize(Vector3::new(1.0, 1.0, 0.0)).unwrap(), 0.3);
        let m = r.matrix() * 1.5;
        let svd = svd3(&m);
        for s in svd.sigma {
            assert!((s - 1.5).abs() < 1e-14);
        }
        let d = Matrix3::identity() * 1.5;
        assert!((svd.o1 * m * svd.o2.transpose() - d).norm() < 1e-12);
    }

    #[test]
    fn reduce_diagonal_z() {
        let m = Matrix3::from_diagonal(&Vector3::new(0.0, 0.0, 2.0));
        let red = canonical_reduction(&CorrelationMatrix::from_matrix(m)).unwrap();
        assert_eq!((red.s, red.t), (2.0, 0.0));
        assert!(red.residual(&m) < 1e-15);
        assert!((red.r.matrix().determinant() - 1.0).abs() < 1e-15);
        assert!((red.q.matrix().determinant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reduce_aligned_scenario() {
        let (s, t, h) = reduced_bell(&MeasurementScenario::aligned_z()).unwrap();
        assert_eq!((s, t), (2.0, 0.0));
        assert_eq!(s * s + t * t, 4.0);
        let lhs = HermitianEigen::new(h.matrix(), 1e-12).unwrap().values;
        let rhs = HermitianEigen::new(bell_operator(&MeasurementScenario::aligned_z()).matrix(), 1e-12)
            .unwrap()
            .values;
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reduce_xy_a_with_repeated_z_b() {
        let sc = MeasurementScenario::new(
            UnitVector3::new(1.0, 0.0, 0.0).unwrap(),
            UnitVector3::new(0.0, 1.0, 0.0).unwrap(),
            UnitVector3::Z,
            UnitVector3::Z,
        );
        let (s, t, h) = reduced_bell(&sc).unwrap();
        assert!((s * s + t * t - 4.0).abs() < 1e-12);
        let lhs = HermitianEigen::new(h.matrix(), 1e-12).unwrap().values;
        let rhs = HermitianEigen::new(bell_operator(&sc).matrix(), 1e-12).unwrap().values;
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_three_rejected_with_sigma3() {
        let m = CorrelationMatrix::from_matrix(Matrix3::identity());
        match canonical_reduction(&m) {
            Err(Error::RankViolation { sigma3 }) => assert!((sigma3 - 1.0).abs() < 1e-14),
            other => panic!("expected rank violation, got {other:?}"),
        }
    }

    #[test]
    fn random_rank_two_reductions() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10_000 {
            let m = random_rank2(&mut rng);
            let red = canonical_reduction(&CorrelationMatrix::from_matrix(m)).unwrap();
            assert!(red.residual(&m) < 1e-10);
            assert!(red.s >= red.t && red.t >= 0.0);
            let sv = svd3(&m).sigma;
            assert!((sv[0] - red.s).abs() < 1e-10 && (sv[1] - red.t).abs() < 1e-10 && sv[2] < 1e-10);
        }
    }

    #[test]
    fn scenario_reductions_satisfy_sum_of_squares_and_spectra_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..500 {
            let sc = MeasurementScenario::random(&mut rng);
            let m = *correlation_matrix(&sc).matrix();
            let red = canonical_reduction(&CorrelationMatrix::from_matrix(m)).unwrap();
            assert!((red.s * red.s + red.t * red.t - 4.0).abs() < 1e-9);

            let (_, _, h) = reduced_bell(&sc).unwrap();
            let lhs = HermitianEigen::new(h.matrix(), 1e-12).unwrap().values;
            let rhs = HermitianEigen::new(bell_operator(&sc).matrix(), 1e-12).unwrap().values;
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn explicit_unitary_chain_maps_bell_operator_to_reduced_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..300 {
            let sc = MeasurementScenario::random(&mut rng);
            let m = correlation_matrix(&sc);
            let red = canonical_reduction(&m).unwrap();
            let w = kron(&spin_representation(&red.r), &spin_representation(&red.q));
            let conj = &w * coupling_operator(m.matrix()).matrix() * w.adjoint();
            assert!((conj - reduced_operator(red.s, red.t).matrix()).norm() < 1e-9);
        }
    }

    #[test]
    fn certificate_serializes_with_named_fields() {
        let m = *correlation_matrix(&MeasurementScenario::aligned_z()).matrix();
        let red = canonical_reduction(&CorrelationMatrix::from_matrix(m)).unwrap();
        let cert = red.certificate(&m);
        let json = serde_json::to_value(&cert).unwrap();
        for key in [
            "R",
            "Q",
            "s",
            "t",
            "reconstruction_residual",
            "det_r_residual",
            "det_q_residual",
            "sum_of_squares",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        let back: ReductionCertificate = serde_json::from_value(json).unwrap();
        assert_eq!(back, cert);
        assert!((from_rows(&back.r) * m * from_rows(&back.q).transpose() - red.canonical_form()).norm() < 1e-10);
    }
}
