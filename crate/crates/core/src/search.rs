//! Numerical certification of the CHSH bound: seesaw search over directions
//! and states, Monte-Carlo norm sampling, and a qubit Pauli positive control.

use std::f64::consts::SQRT_2;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{bell_operator, chsh_operator_with, BellOperator, MeasurementScenario};
use crate::error::{Error, Result};
use crate::linalg::{fix_phase, hermitian_asymmetry, kron, CMatrix, CVector, HermitianEigen, ONE, ZERO};
use crate::spectrum::eig_hermitian;
use crate::spin::{generator_matrices, UnitVector3};
use crate::tolerance::DEFAULT;

/// Observable family each party measures with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `S(u)` on a qutrit.
    #[value(name = "qutrit-spin1")]
    QutritSpin1,
    /// `sigma(u)` on a qubit.
    #[value(name = "qubit-pauli")]
    QubitPauli,
}

impl Family {
    pub fn local_dim(self) -> usize {
        match self {
            Family::QutritSpin1 => 3,
            Family::QubitPauli => 2,
        }
    }

    pub fn generators(self) -> [CMatrix; 3] {
        match self {
            Family::QutritSpin1 => generator_matrices(),
            Family::QubitPauli => {
                let i = Complex64::i();
                [
                    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
                    CMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
                    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
                ]
            }
        }
    }

    pub fn observable(self, u: &UnitVector3) -> CMatrix {
        let g = self.generators();
        let v = u.vector();
        g[0].scale(v.x) + g[1].scale(v.y) + g[2].scale(v.z)
    }

    pub fn bell_operator(self, sc: &MeasurementScenario) -> BellOperator {
        match self {
            Family::QutritSpin1 => bell_operator(sc),
            Family::QubitPauli => BellOperator::from_matrix(chsh_operator_with(sc, |u| self.observable(u)))
                .expect("Pauli CHSH operator is Hermitian"),
        }
    }

    /// Known supremum of the CHSH value: 2 for spin-1 qutrits, `2 sqrt 2` for
    /// qubits.
    pub fn expected_supremum(self) -> f64 {
        match self {
            Family::QutritSpin1 => 2.0,
            Family::QubitPauli => 2.0 * SQRT_2,
        }
    }
}

/// Pure state vector or density operator on the two-party space.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(CVector),
    Mixed(CMatrix),
}

impl QuantumState {
    pub fn pure(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > DEFAULT.unit_norm {
            return Err(Error::InvalidState(format!("pure state norm {norm}")));
        }
        Ok(Self::Pure(v))
    }

    pub fn mixed(rho: CMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::InvalidState("density matrix is not square".into()));
        }
        let asymmetry = hermitian_asymmetry(&rho);
        if asymmetry > 1e-12 {
            return Err(Error::InvalidState(format!("density matrix asymmetry {asymmetry:e}")));
        }
        let trace = rho.trace();
        if (trace - ONE).norm() > 1e-12 {
            return Err(Error::InvalidState(format!("density matrix trace {trace}")));
        }
        let eig = HermitianEigen::new(&rho, 1e-12)?;
        if eig.values[0] < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {}", eig.values[0])));
        }
        Ok(Self::Mixed(rho))
    }

    /// `|k>` in the product basis of dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[k] = ONE;
        Self::Pure(v)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::Mixed(CMatrix::identity(dim, dim).scale(1.0 / dim as f64))
    }

    pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let v = CVector::from_fn(dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let n = v.norm();
        Self::Pure(v.unscale(n))
    }

    /// Hilbert-Schmidt sample `G G^dagger / tr(G G^dagger)`.
    pub fn random_mixed<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let gg = &g * g.adjoint();
        let tr = gg.trace().re;
        let rho = gg.unscale(tr);
        Self::Mixed((&rho + rho.adjoint()).scale(0.5))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.len(),
            Self::Mixed(m) => m.nrows(),
        }
    }

    pub fn density(&self) -> CMatrix {
        match self {
            Self::Pure(v) => v * v.adjoint(),
            Self::Mixed(m) => m.clone(),
        }
    }
}

/// Serialized state: `{"kind": "pure", "data": [[re, im], ...]}` or
/// `{"kind": "mixed", "data": [[[re, im], ...], ...]}` (rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum StateRecord {
    Pure(Vec<[f64; 2]>),
    Mixed(Vec<Vec<[f64; 2]>>),
}

impl From<&QuantumState> for StateRecord {
    fn from(state: &QuantumState) -> Self {
        let pair = |z: &Complex64| [z.re, z.im];
        match state {
            QuantumState::Pure(v) => StateRecord::Pure(v.iter().map(pair).collect()),
            QuantumState::Mixed(m) => {
                StateRecord::Mixed(m.row_iter().map(|row| row.iter().map(pair).collect()).collect())
            }
        }
    }
}

impl TryFrom<&StateRecord> for QuantumState {
    type Error = Error;

    fn try_from(rec: &StateRecord) -> Result<Self> {
        let c = |p: &[f64; 2]| Complex64::new(p[0], p[1]);
        match rec {
            StateRecord::Pure(v) => QuantumState::pure(CVector::from_iterator(v.len(), v.iter().map(c))),
            StateRecord::Mixed(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidState("density matrix rows have unequal length".into()));
                }
                QuantumState::mixed(CMatrix::from_fn(n, n, |i, j| c(&rows[i][j])))
            }
        }
    }
}

impl Serialize for QuantumState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StateRecord::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuantumState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = StateRecord::deserialize(deserializer)?;
        QuantumState::try_from(&rec).map_err(serde::de::Error::custom)
    }
}

/// `Re tr(rho B)`; a non-negligible imaginary part is an error.
pub fn expectation(rho: &QuantumState, b: &BellOperator) -> Result<f64> {
    if rho.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: b.dim(),
            got: rho.dim(),
        });
    }
    let value = match rho {
        QuantumState::Pure(v) => (v.adjoint() * b.matrix() * v)[(0, 0)],
        QuantumState::Mixed(m) => (m * b.matrix()).trace(),
    };
    if value.im.abs() >= DEFAULT.expectation_imag {
        return Err(Error::NonRealExpectation { imag: value.im });
    }
    Ok(value.re)
}

/// `max |lambda|` and a matching eigenvector; the supremum of `|tr(rho B)|`
/// over all states. Ties between `+lambda` and `-lambda` go to the positive
/// eigenvalue.
pub fn best_state_value(b: &BellOperator) -> (f64, QuantumState) {
    let eig = HermitianEigen::new(b.matrix(), DEFAULT.hermitian).expect("Bell operators are Hermitian");
    let n = eig.values.len();
    let (lo, hi) = (eig.values[0], eig.values[n - 1]);
    let k = if hi >= -lo - 1e-12 { n - 1 } else { 0 };
    let mut v = eig.vectors.column(k).into_owned();
    fix_phase(&mut v);
    (eig.values[k].abs(), QuantumState::Pure(v))
}

/// Largest eigenvalue and its eigenvector.
fn top_eigenpair(b: &BellOperator) -> (f64, CVector) {
    let eig = HermitianEigen::new(b.matrix(), DEFAULT.hermitian).expect("Bell operators are Hermitian");
    let n = eig.values.len();
    (eig.values[n - 1], eig.vectors.column(n - 1).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub family: Family,
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            family: Family::QutritSpin1,
            restarts: 200,
            max_iterations: 500,
            tolerance: 1e-9,
            seed: 0,
            jobs: None,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restart count must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("iteration cap must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub family: Family,
    pub best_value: f64,
    pub best_scenario: MeasurementScenario,
    pub best_state: QuantumState,
    /// Seesaw iterations of the best restart.
    pub iterations: usize,
    /// Restarts that ran to completion.
    pub restarts: usize,
    /// Restarts aborted because the objective decreased.
    pub aborted_restarts: usize,
    pub converged: bool,
}

/// Result of one seesaw run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeesawOutcome {
    pub value: f64,
    pub scenario: MeasurementScenario,
    pub state: QuantumState,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each iteration.
    pub trace: Vec<f64>,
}

/// `T_ij = <psi| G_i (x) G_j |psi>`.
fn correlation_tensor(family: Family, psi: &CVector) -> Matrix3<f64> {
    let g = family.generators();
    Matrix3::from_fn(|i, j| (psi.adjoint() * kron(&g[i], &g[j]) * psi)[(0, 0)].re)
}

/// Maximizer of `u . w` on the sphere, keeping `current` when `w` vanishes.
fn align(w: Vector3<f64>, current: UnitVector3) -> UnitVector3 {
    if w.norm() > 1e-14 {
        UnitVector3::normalize(w).unwrap_or(current)
    } else {
        current
    }
}

/// `sum_ij T_ij [a_i (b + b')_j + a'_i (b - b')_j]`.
fn tensor_objective(t: &Matrix3<f64>, sc: &MeasurementScenario) -> f64 {
    let (a, ap) = (sc.a.vector(), sc.a_prime.vector());
    let (b, bp) = (sc.b.vector(), sc.b_prime.vector());
    a.dot(&(t * (b + bp))) + ap.dot(&(t * (b - bp)))
}

/// Seesaw from a given scenario, optionally with a starting state.
///
/// Each iteration replaces the state by the top eigenvector of the current
/// Bell operator, then each party's pair of directions by the exact maximizer
/// of the (linear) objective with the other party fixed. Every step is
/// checked for monotonicity.
pub fn seesaw(
    family: Family,
    start: MeasurementScenario,
    initial_state: Option<&QuantumState>,
    max_iterations: usize,
    tolerance: f64,
) -> Result<SeesawOutcome> {
    let slack = DEFAULT.monotone_slack;
    let mut sc = start;
    let mut prev = match initial_state {
        Some(state) => expectation(state, &family.bell_operator(&sc))?,
        None => f64::NEG_INFINITY,
    };
    let mut trace = Vec::new();
    let mut psi = CVector::zeros(0);
    let mut converged = false;
    let mut iterations = 0;

    let check = |before: f64, after: f64, iteration: usize| {
        if after < before - slack * (1.0 + before.abs()) {
            Err(Error::NonMonotone {
                before,
                after,
                iteration,
            })
        } else {
            Ok(())
        }
    };

    for it in 1..=max_iterations {
        iterations = it;
        let (lambda, v) = top_eigenpair(&family.bell_operator(&sc));
        check(prev, lambda, it)?;
        psi = v;

        let t = correlation_tensor(family, &psi);
        let (b, bp) = (sc.b.vector(), sc.b_prime.vector());
        sc.a = align(t * (b + bp), sc.a);
        sc.a_prime = align(t * (b - bp), sc.a_prime);
        let after_a = tensor_objective(&t, &sc);
        check(lambda, after_a, it)?;

        let (a, ap) = (sc.a.vector(), sc.a_prime.vector());
        sc.b = align(t.transpose() * (a + ap), sc.b);
        sc.b_prime = align(t.transpose() * (a - ap), sc.b_prime);
        let after_b = tensor_objective(&t, &sc);
        check(after_a, after_b, it)?;

        trace.push(after_b);
        let gain = after_b - prev;
        prev = after_b;
        if gain < tolerance {
            converged = true;
            break;
        }
    }

    fix_phase(&mut psi);
    let state = QuantumState::Pure(psi);
    let value = expectation(&state, &family.bell_operator(&sc))?;
    Ok(SeesawOutcome {
        value,
        scenario: sc,
        state,
        iterations,
        converged,
        trace,
    })
}

/// Deterministic per-index RNG: one ChaCha stream per work item.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// The `index`-th random scenario for `seed`, independent of thread count.
pub fn random_scenario(seed: u64, index: u64) -> MeasurementScenario {
    MeasurementScenario::random(&mut stream_rng(seed, index))
}

/// Run `f` on a dedicated pool of `jobs` threads, or the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::Config("jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Multi-start seesaw. Restarts run in parallel; the best value wins with
/// the lowest restart index breaking ties.
pub fn maximize_violation(config: &SearchConfig) -> Result<SearchReport> {
    config.validate()?;
    let outcomes: Vec<Result<SeesawOutcome>> = with_jobs(config.jobs, || {
        (0..config.restarts as u64)
            .into_par_iter()
            .map(|k| {
                let start = random_scenario(config.seed, k);
                seesaw(config.family, start, None, config.max_iterations, config.tolerance)
            })
            .collect()
    })?;

    let mut best: Option<SeesawOutcome> = None;
    let mut completed = 0;
    let mut aborted = 0;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                completed += 1;
                if best.as_ref().is_none_or(|b| o.value > b.value) {
                    best = Some(o);
                }
            }
            Err(Error::NonMonotone { .. }) => aborted += 1,
            Err(e) => return Err(e),
        }
    }
    let best = best.ok_or_else(|| Error::Config(format!("all {aborted} restarts aborted")))?;
    Ok(SearchReport {
        family: config.family,
        best_value: best.value,
        best_scenario: best.scenario,
        best_state: best.state,
        iterations: best.iterations,
        restarts: completed,
        aborted_restarts: aborted,
        converged: best.converged,
    })
}

/// Operator norm summary over a batch of spin-1 scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormCertificate {
    pub samples: usize,
    pub max_norm: f64,
    pub min_norm: f64,
}

/// Operator norms of `B` for each scenario, in input order.
pub fn operator_norms(scenarios: &[MeasurementScenario]) -> Result<Vec<f64>> {
    scenarios
        .par_iter()
        .map(|sc| Ok(eig_hermitian(bell_operator(sc).matrix())?.operator_norm))
        .collect()
}

/// Check every norm lies in `[2 - band, 2 + band]`.
pub fn certify_scenarios(scenarios: &[MeasurementScenario]) -> Result<NormCertificate> {
    if scenarios.is_empty() {
        return Err(Error::Config("empty sample".into()));
    }
    let norms = operator_norms(scenarios)?;
    for (sc, &norm) in scenarios.iter().zip(&norms) {
        if (norm - 2.0).abs() > DEFAULT.norm_band {
            return Err(Error::CertificationBand {
                norm,
                scenario: serde_json::to_string(sc).unwrap_or_default(),
            });
        }
    }
    Ok(NormCertificate {
        samples: norms.len(),
        max_norm: norms.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_norm: norms.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Sample `n` scenarios from `seed` and certify their norms.
pub fn monte_carlo_certify(n: usize, seed: u64) -> Result<NormCertificate> {
    if n == 0 {
        return Err(Error::Config("empty sample".into()));
    }
    let scenarios: Vec<_> = (0..n as u64)
        .into_par_iter()
        .map(|k| random_scenario(seed, k))
        .collect();
    certify_scenarios(&scenarios)
}
