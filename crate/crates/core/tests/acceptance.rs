//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{PI, SQRT_2};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, Matrix2, Matrix3, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;

use spinchsh::bell::{bell_operator, correlation_matrix, coupling_operator, reduced_operator, MeasurementScenario};
use spinchsh::linalg::kron;
use spinchsh::reduction::canonical_reduction;
use spinchsh::search::{
    expectation, maximize_violation, random_scenario, seesaw, stream_rng, Family, QuantumState, SearchConfig,
};
use spinchsh::spectrum::{closed_form_spectrum, eig_hermitian, verify_invariance};
use spinchsh::spin::{spin_representation, Rotation3};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Criterion 1: Operator norm of B in [2 - 1e-9, 2 + 1e-9] for 1e5 seeded scenarios.
fn norm_constancy() -> Verdict {
    const N: u64 = 100_000;
    const BAND: f64 = 1e-9;
    let start = Instant::now();
    let norms: Vec<f64> = (0..N)
        .into_par_iter()
        .map(|k| {
            eig_hermitian(bell_operator(&random_scenario(2024, k)).matrix())
                .unwrap()
                .operator_norm
        })
        .collect();
    let max = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        (max - 2.0).abs() <= BAND && (min - 2.0).abs() <= BAND && elapsed < 60.0,
        format!("{N} scenarios, norm in [{min:.17}, {max:.17}], {elapsed:.2}s"),
    )
}

/// Criterion 2: on a 50x50 grid over [0, 2]^2 the numeric spectrum of
/// H_{s,t} equals the closed form elementwise within 1e-10.
fn closed_form_oracle() -> Verdict {
    const N: usize = 50;
    const TOL: f64 = 1e-10;
    let worst = (0..N * N)
        .into_par_iter()
        .map(|k| {
            let s = 2.0 * (k / N) as f64 / (N - 1) as f64;
            let t = 2.0 * (k % N) as f64 / (N - 1) as f64;
            let numeric = eig_hermitian(reduced_operator(s, t).matrix()).unwrap();
            numeric.max_abs_difference(&closed_form_spectrum(s, t).unwrap())
        })
        .reduce(|| 0.0, f64::max);
    verdict(worst < TOL, format!("{} grid points, max deviation {worst:.3e}", N * N))
}

/// Criterion 3: (U_R (x) U_Q) K(M) (U_R (x) U_Q)^dagger = K(R M Q^T) within 1e-10.
fn covariance() -> Verdict {
    const N: u64 = 1000;
    const TOL: f64 = 1e-10;
    let worst = (0..N)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(303, k);
            let r = Rotation3::random(&mut rng);
            let q = Rotation3::random(&mut rng);
            let m = Matrix3::from_fn(|_, _| rng.random_range(-2.0..2.0));
            let w = kron(&spin_representation(&r), &spin_representation(&q));
            let lhs = &w * coupling_operator(&m).matrix() * w.adjoint();
            (lhs - coupling_operator(&(r.matrix() * m * q.matrix().transpose())).matrix()).norm()
        })
        .reduce(|| 0.0, f64::max);
    verdict(
        worst < TOL,
        format!("{N} triples (R, Q, M), max Frobenius error {worst:.3e}"),
    )
}

/// Criterion 4: over 1e4 scenarios, det R = det Q = 1 within 1e-10,
/// residual < 1e-10 and s^2 + t^2 = 4 within 1e-9.
fn reduction_certificate() -> Verdict {
    const N: u64 = 10_000;
    let stats = (0..N)
        .into_par_iter()
        .map(|k| {
            let m = correlation_matrix(&random_scenario(404, k));
            match canonical_reduction(&m) {
                Ok(red) => [
                    (red.r.matrix().determinant() - 1.0)
                        .abs()
                        .max((red.q.matrix().determinant() - 1.0).abs()),
                    red.residual(m.matrix()),
                    (red.s * red.s + red.t * red.t - 4.0).abs(),
                ],
                Err(_) => [f64::INFINITY; 3],
            }
        })
        .reduce(|| [0.0; 3], |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])]);
    verdict(
        stats[0] < 1e-10 && stats[1] < 1e-10 && stats[2] < 1e-9,
        format!(
            "{N} scenarios, det err {:.3e}, residual {:.3e}, |s^2+t^2-4| {:.3e}",
            stats[0], stats[1], stats[2]
        ),
    )
}

/// Criterion 5: a = a' = b = b' = z with |1,1> gives 2 within 1e-12, and
/// the seesaw started there converges immediately.
fn tightness() -> Verdict {
    let sc = MeasurementScenario::aligned_z();
    let ket = QuantumState::basis(9, 0);
    let value = expectation(&ket, &bell_operator(&sc)).unwrap();
    let run = seesaw(Family::QutritSpin1, sc, Some(&ket), 500, 1e-9).unwrap();
    verdict(
        (value - 2.0).abs() < 1e-12 && run.converged && run.iterations <= 2 && (run.value - 2.0).abs() < 1e-12,
        format!(
            "<1,1|B|1,1> = {value}, seesaw {} iteration(s), value {}",
            run.iterations, run.value
        ),
    )
}

/// Largest CHSH eigenvalue for qubits with all directions in the x-z plane,
/// `a` fixed at angle 0, over a uniform angle grid. Real 4x4 arithmetic only.
fn qubit_angle_grid(steps: usize) -> f64 {
    let obs = |theta: f64| Matrix2::new(theta.cos(), theta.sin(), theta.sin(), -theta.cos());
    let angles: Vec<f64> = (0..steps).map(|k| 2.0 * PI * k as f64 / steps as f64).collect();
    let a = obs(0.0);
    angles
        .par_iter()
        .map(|&ap| {
            let ap = obs(ap);
            let mut best = f64::NEG_INFINITY;
            for &b in &angles {
                for &bp in &angles {
                    let (b, bp) = (obs(b), obs(bp));
                    let op = a.kronecker(&b) + a.kronecker(&bp) + ap.kronecker(&b) - ap.kronecker(&bp);
                    let dynamic = DMatrix::from_column_slice(4, 4, op.as_slice());
                    let top = SymmetricEigen::new(dynamic).eigenvalues.max();
                    best = best.max(top);
                }
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Criterion 6: the same seesaw on qubit Pauli CHSH reaches 2 sqrt 2
/// within 1e-6, cross-checked by an angle-grid brute force.
fn positive_control() -> Verdict {
    let grid = qubit_angle_grid(72);
    let report = maximize_violation(&SearchConfig {
        family: Family::QubitPauli,
        seed: 1,
        ..SearchConfig::default()
    })
    .unwrap();
    let qutrit = maximize_violation(&SearchConfig {
        family: Family::QutritSpin1,
        seed: 1,
        ..SearchConfig::default()
    })
    .unwrap();
    let tsirelson = 2.0 * SQRT_2;
    verdict(
        (grid - tsirelson).abs() < 1e-9
            && (report.best_value - tsirelson).abs() < 1e-6
            && (report.best_value - grid).abs() < 1e-6
            && (qutrit.best_value - 2.0).abs() < 1e-6,
        format!(
            "grid oracle {grid:.10}, qubit seesaw {:.10}, qutrit seesaw {:.10} ({} restarts)",
            report.best_value, qutrit.best_value, report.restarts
        ),
    )
}

/// Criterion 7: Off-block norms across V4/V5 < 1e-13 for 100 random (s, t).
fn subspace_invariance() -> Verdict {
    let mut rng = stream_rng(707, 0);
    let worst = (0..100)
        .map(|_| verify_invariance(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)).max())
        .fold(0.0, f64::max);
    verdict(
        worst < 1e-13,
        format!("100 (s, t) pairs, max off-block norm {worst:.3e}"),
    )
}

/// Criterion 8: `verify --random 1000 --seed 7` twice gives byte-identical output.
fn determinism() -> Verdict {
    let invoke = || {
        Command::new(env!("CARGO_BIN_EXE_spinchsh"))
            .env_remove("SPINCHSH_SEED")
            .args(["verify", "--random", "1000", "--seed", "7"])
            .output()
            .expect("binary runs")
    };
    let (first, second) = (invoke(), invoke());
    let ok = first.status.code() == Some(0) && second.status.code() == Some(0) && first.stdout == second.stdout;
    verdict(
        ok,
        format!("{} bytes per run, exit {:?}", first.stdout.len(), first.status.code()),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("norm constancy", norm_constancy),
        ("closed-form spectrum oracle", closed_form_oracle),
        ("rotational covariance", covariance),
        ("reduction certificate", reduction_certificate),
        ("tightness", tightness),
        ("optimizer positive control", positive_control),
        ("subspace invariance", subspace_invariance),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failures += 1;
        }
        println!(
            "[{}] {} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
