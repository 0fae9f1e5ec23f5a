//! Command-line front end. `run` is the whole program minus process I/O so
//! tests can drive it directly.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bell::{bell_operator, correlation_matrix, reduced_operator, CorrelationMatrix, MeasurementScenario};
use crate::error::Error;
use crate::reduction::{canonical_reduction, ReductionCertificate};
use crate::search::{
    expectation, maximize_violation, random_scenario, with_jobs, Family, QuantumState, SearchConfig, StateRecord,
};
use crate::spectrum::{closed_form_spectrum, eig_hermitian, grid_csv, grid_sweep, SpectrumResult};
use crate::spin::UnitVector3;
use crate::tolerance::DEFAULT;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_BAND: i32 = 2;
pub const EXIT_RANK: i32 = 3;

pub const SEED_ENV: &str = "SPINCHSH_SEED";

/// Direction norms further than this from 1 are rejected outright.
const NORMALIZE_LIMIT: f64 = 1e-6;

/// Tolerance on the search value against the family's known supremum.
const SEARCH_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "spinchsh", version, about = "CHSH Bell operators for spin-1 qutrits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify that the Bell operator norm is 2 for given or random scenarios.
    Verify(VerifyArgs),
    /// Closed-form and numerical spectra side by side.
    Spectrum(SpectrumArgs),
    /// Canonical reduction certificate R M Q^T = diag(s, 0, t).
    Reduce(ReduceArgs),
    /// Seesaw search for the largest CHSH value.
    Search(SearchArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "random")]
    pub scenario: Option<PathBuf>,
    /// Number of random scenarios to sample.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write the rows as CSV to this path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, requires = "t", allow_negative_numbers = true)]
    pub s: Option<f64>,
    #[arg(long, requires = "s", allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[arg(long, conflicts_with_all = ["s", "grid"])]
    pub scenario: Option<PathBuf>,
    /// Emit a CSV sweep over an N x N grid of (s, t) in [0, max]^2.
    #[arg(long, conflicts_with = "s")]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub max: f64,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long, conflicts_with = "matrix")]
    pub scenario: Option<PathBuf>,
    /// Nine comma-separated entries of M, row-major.
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    /// Reduce the random scenario drawn from this seed.
    #[arg(long, conflicts_with_all = ["scenario", "matrix"])]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value = "qutrit-spin1")]
    pub family: Family,
    #[arg(long, default_value_t = 200)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Exit code and captured streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String, stderr: String) -> Self {
        Self {
            code: EXIT_OK,
            stdout,
            stderr,
        }
    }

    fn fail(code: i32, stderr: impl Into<String>) -> Self {
        Self {
            code,
            stdout: String::new(),
            stderr: stderr.into(),
        }
    }
}

/// Scenario input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub a: [f64; 3],
    pub a_prime: [f64; 3],
    pub b: [f64; 3],
    pub b_prime: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateRecord>,
}

impl ScenarioFile {
    pub fn from_scenario(sc: &MeasurementScenario) -> Self {
        Self {
            a: sc.a.to_array(),
            a_prime: sc.a_prime.to_array(),
            b: sc.b.to_array(),
            b_prime: sc.b_prime.to_array(),
            state: None,
        }
    }

    /// Validate directions, normalizing small deviations. Warnings are
    /// appended to `warnings`.
    pub fn scenario(&self, warnings: &mut Vec<String>) -> Result<MeasurementScenario, Error> {
        let mut dir = |name: &str, v: [f64; 3]| -> Result<UnitVector3, Error> {
            let raw = Vector3::from(v);
            let norm = raw.norm();
            let dev = (norm - 1.0).abs();
            if dev.is_nan() || dev > NORMALIZE_LIMIT {
                return Err(Error::Normalization {
                    norm,
                    tol: NORMALIZE_LIMIT,
                });
            }
            if dev > DEFAULT.normalization {
                warnings.push(format!("warning: `{name}` has norm {norm}; normalized"));
            }
            UnitVector3::normalize(raw)
        };
        Ok(MeasurementScenario::new(
            dir("a", self.a)?,
            dir("a_prime", self.a_prime)?,
            dir("b", self.b)?,
            dir("b_prime", self.b_prime)?,
        ))
    }
}

pub fn read_scenario_file(path: &Path) -> Result<ScenarioFile, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub index: usize,
    pub a: [f64; 3],
    pub a_prime: [f64; 3],
    pub b: [f64; 3],
    pub b_prime: [f64; 3],
    pub s: f64,
    pub t: f64,
    /// `s^2 + t^2 - 4`.
    pub sum_of_squares_residual: f64,
    pub norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expectation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub max_norm: f64,
    pub min_norm: f64,
    pub all_within_band: bool,
    pub rows: Vec<VerifyRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub s: f64,
    pub t: f64,
    pub closed_form: SpectrumResult,
    pub numerical: SpectrumResult,
    pub max_abs_discrepancy: f64,
}

/// Run the CLI on `args` (including the program name). `env_seed` is the
/// value of `SPINCHSH_SEED`, which overrides any `--seed`.
pub fn run<I, T>(args: I, env_seed: Option<&str>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome::ok(text, String::new())
            } else {
                Outcome::fail(code, text)
            };
        }
    };
    let env_seed = match env_seed.map(|s| s.trim().parse::<u64>()) {
        None => None,
        Some(Ok(seed)) => Some(seed),
        Some(Err(e)) => return Outcome::fail(EXIT_INPUT, format!("invalid {SEED_ENV}: {e}\n")),
    };
    match cli.command {
        Command::Verify(mut a) => {
            if let Some(seed) = env_seed {
                a.seed = seed;
            }
            cmd_verify(&a)
        }
        Command::Spectrum(a) => cmd_spectrum(&a),
        Command::Reduce(mut a) => {
            if a.seed.is_some() {
                a.seed = env_seed.or(a.seed);
            }
            cmd_reduce(&a)
        }
        Command::Search(mut a) => {
            if let Some(seed) = env_seed {
                a.seed = seed;
            }
            cmd_search(&a)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::RankViolation { .. } => EXIT_RANK,
        Error::CertificationBand { .. } => EXIT_BAND,
        _ => EXIT_INPUT,
    }
}

fn load(path: &Path, warnings: &mut Vec<String>) -> Result<(MeasurementScenario, Option<QuantumState>), Outcome> {
    let file = read_scenario_file(path).map_err(|e| Outcome::fail(EXIT_INPUT, format!("error: {e}\n")))?;
    let sc = file
        .scenario(warnings)
        .map_err(|e| Outcome::fail(EXIT_INPUT, format!("error: {}: {e}\n", path.display())))?;
    let state = match &file.state {
        None => None,
        Some(rec) => Some(
            QuantumState::try_from(rec)
                .map_err(|e| Outcome::fail(EXIT_INPUT, format!("error: {}: {e}\n", path.display())))?,
        ),
    };
    Ok((sc, state))
}

fn verify_row(index: usize, sc: &MeasurementScenario, state: Option<&QuantumState>) -> Result<VerifyRow, Error> {
    let red = canonical_reduction(&correlation_matrix(sc))?;
    let b = bell_operator(sc);
    let norm = eig_hermitian(b.matrix())?.operator_norm;
    let expectation = state.map(|rho| expectation(rho, &b)).transpose()?;
    Ok(VerifyRow {
        index,
        a: sc.a.to_array(),
        a_prime: sc.a_prime.to_array(),
        b: sc.b.to_array(),
        b_prime: sc.b_prime.to_array(),
        s: red.s,
        t: red.t,
        sum_of_squares_residual: red.s * red.s + red.t * red.t - 4.0,
        norm,
        expectation,
    })
}

/// CSV columns: index, a(3), a'(3), b(3), b'(3), s, t, norm.
pub fn verify_csv(rows: &[VerifyRow]) -> String {
    let mut out = String::from(
        "index,a_x,a_y,a_z,a_prime_x,a_prime_y,a_prime_z,b_x,b_y,b_z,b_prime_x,b_prime_y,b_prime_z,s,t,norm\n",
    );
    for r in rows {
        let mut fields = vec![r.index.to_string()];
        for v in [r.a, r.a_prime, r.b, r.b_prime] {
            fields.extend(v.iter().map(|x| format!("{x:?}")));
        }
        fields.extend([r.s, r.t, r.norm].iter().map(|x| format!("{x:?}")));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn cmd_verify(args: &VerifyArgs) -> Outcome {
    use rayon::prelude::*;

    let mut warnings = Vec::new();
    let rows: Result<Vec<VerifyRow>, Error> = match (&args.scenario, args.random) {
        (Some(path), _) => match load(path, &mut warnings) {
            Ok((sc, state)) => verify_row(0, &sc, state.as_ref()).map(|r| vec![r]),
            Err(out) => return out,
        },
        (None, Some(0)) => return Outcome::fail(EXIT_INPUT, "error: --random needs at least one sample\n"),
        (None, Some(n)) => {
            let seed = args.seed;
            match with_jobs(args.jobs, || {
                (0..n)
                    .into_par_iter()
                    .map(|k| verify_row(k, &random_scenario(seed, k as u64), None))
                    .collect()
            }) {
                Ok(rows) => rows,
                Err(e) => return Outcome::fail(EXIT_INPUT, format!("error: {e}\n")),
            }
        }
        (None, None) => return Outcome::fail(EXIT_INPUT, "error: pass --scenario FILE or --random N\n"),
    };
    let rows = match rows {
        Ok(rows) => rows,
        Err(e) => return Outcome::fail(error_code(&e), format!("error: {e}\n")),
    };

    if let Some(path) = &args.csv {
        if let Err(e) = std::fs::write(path, verify_csv(&rows)) {
            return Outcome::fail(EXIT_INPUT, format!("error: {}: {e}\n", path.display()));
        }
    }

    let within = |n: f64| (n - 2.0).abs() <= DEFAULT.norm_band;
    let report = VerifyReport {
        samples: rows.len(),
        max_norm: rows.iter().map(|r| r.norm).fold(f64::NEG_INFINITY, f64::max),
        min_norm: rows.iter().map(|r| r.norm).fold(f64::INFINITY, f64::min),
        all_within_band: rows.iter().all(|r| within(r.norm)),
        rows,
    };
    let mut stderr = warnings.join("\n");
    if !stderr.is_empty() {
        stderr.push('\n');
    }
    let code = if report.all_within_band { EXIT_OK } else { EXIT_BAND };
    if code == EXIT_BAND {
        for r in report.rows.iter().filter(|r| !within(r.norm)) {
            stderr.push_str(&format!("norm {} outside band at index {}\n", r.norm, r.index));
        }
    }
    Outcome {
        code,
        stdout: to_json(&report),
        stderr,
    }
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Outcome {
    if let Some(n) = args.grid {
        return match with_jobs(args.jobs, || grid_sweep(n, args.max)) {
            Ok(Ok(rows)) => Outcome::ok(grid_csv(&rows), String::new()),
            Ok(Err(e)) | Err(e) => Outcome::fail(EXIT_INPUT, format!("error: {e}\n")),
        };
    }
    let mut warnings = Vec::new();
    let (s, t, numerical) = match (&args.scenario, args.s, args.t) {
        (Some(path), _, _) => {
            let (sc, _) = match load(path, &mut warnings) {
                Ok(x) => x,
                Err(out) => return out,
            };
            let red = match canonical_reduction(&correlation_matrix(&sc)) {
                Ok(r) => r,
                Err(e) => return Outcome::fail(error_code(&e), format!("error: {e}\n")),
            };
            (red.s, red.t, eig_hermitian(bell_operator(&sc).matrix()))
        }
        (None, Some(s), Some(t)) => {
            if let Err(e) = closed_form_spectrum(s, t) {
                return Outcome::fail(EXIT_INPUT, format!("error: {e}\n"));
            }
            (s, t, eig_hermitian(reduced_operator(s, t).matrix()))
        }
        _ => return Outcome::fail(EXIT_INPUT, "error: pass --s S --t T, --scenario FILE or --grid N\n"),
    };
    let closed_form = match closed_form_spectrum(s, t) {
        Ok(c) => c,
        Err(e) => return Outcome::fail(EXIT_INPUT, format!("error: {e}\n")),
    };
    let numerical = match numerical {
        Ok(n) => n,
        Err(e) => return Outcome::fail(EXIT_INPUT, format!("error: {e}\n")),
    };
    let report = SpectrumReport {
        s,
        t,
        max_abs_discrepancy: closed_form.max_abs_difference(&numerical),
        closed_form,
        numerical,
    };
    Outcome::ok(to_json(&report), warnings.join("\n"))
}

fn parse_matrix(text: &str) -> Result<Matrix3<f64>, String> {
    let values: Vec<f64> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad matrix entry `{s}`: {e}")))
        .collect::<Result<_, _>>()?;
    if values.len() != 9 {
        return Err(format!("--matrix needs 9 entries, got {}", values.len()));
    }
    Ok(Matrix3::from_row_slice(&values))
}

pub fn cmd_reduce(args: &ReduceArgs) -> Outcome {
    let mut warnings = Vec::new();
    let m = match (&args.scenario, &args.matrix, args.seed) {
        (Some(path), _, _) => match load(path, &mut warnings) {
            Ok((sc, _)) => *correlation_matrix(&sc).matrix(),
            Err(out) => return out,
        },
        (None, Some(text), _) => match parse_matrix(text) {
            Ok(m) => m,
            Err(e) => return Outcome::fail(EXIT_INPUT, format!("error: {e}\n")),
        },
        (None, None, Some(seed)) => *correlation_matrix(&random_scenario(seed, 0)).matrix(),
        (None, None, None) => {
            return Outcome::fail(EXIT_INPUT, "error: pass --scenario FILE, --matrix M or --seed K\n")
        }
    };
    match canonical_reduction(&CorrelationMatrix::from_matrix(m)) {
        Ok(red) => {
            let cert: ReductionCertificate = red.certificate(&m);
            Outcome::ok(to_json(&cert), warnings.join("\n"))
        }
        Err(e) => Outcome::fail(error_code(&e), format!("error: {e}\n")),
    }
}

pub fn cmd_search(args: &SearchArgs) -> Outcome {
    let config = SearchConfig {
        family: args.family,
        restarts: args.restarts,
        max_iterations: args.max_iterations,
        tolerance: args.tolerance,
        seed: args.seed,
        jobs: args.jobs,
    };
    match maximize_violation(&config) {
        Ok(report) => {
            let expected = args.family.expected_supremum();
            let met = (report.best_value - expected).abs() <= SEARCH_TOL;
            let stderr = if met {
                String::new()
            } else {
                format!("best value {} differs from expected {expected}\n", report.best_value)
            };
            Outcome {
                code: if met { EXIT_OK } else { EXIT_BAND },
                stdout: to_json(&report),
                stderr,
            }
        }
        Err(e) => Outcome::fail(error_code(&e), format!("error: {e}\n")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_flag_parsing() {
        let m = parse_matrix("1, 2, 3, 4 5 6,7,8,-9").unwrap();
        assert_eq!(m[(2, 2)], -9.0);
        assert_eq!(m[(0, 1)], 2.0);
        assert!(parse_matrix("1,2").is_err());
        assert!(parse_matrix("1,2,3,4,5,6,7,8,x").is_err());
    }

    #[test]
    fn scenario_file_normalization_thresholds() {
        let file = |z: f64| ScenarioFile {
            a: [0.0, 0.0, z],
            a_prime: [1.0, 0.0, 0.0],
            b: [0.0, 1.0, 0.0],
            b_prime: [0.0, 0.0, 1.0],
            state: None,
        };
        let mut warnings = Vec::new();
        assert!(file(1.0 + 1e-10).scenario(&mut warnings).is_ok());
        assert!(warnings.is_empty());
        assert!(file(1.0 + 1e-7).scenario(&mut warnings).is_ok());
        assert_eq!(warnings.len(), 1);
        assert!(matches!(
            file(1.0 + 1e-5).scenario(&mut warnings),
            Err(Error::Normalization { .. })
        ));
    }

    #[test]
    fn env_seed_overrides_and_must_parse() {
        let args = ["spinchsh", "verify", "--random", "3", "--seed", "1"];
        let with_env = run(args, Some("42"));
        let direct = run(["spinchsh", "verify", "--random", "3", "--seed", "42"], None);
        assert_eq!(with_env, direct);
        assert_ne!(with_env.stdout, run(args, None).stdout);
        assert_eq!(run(args, Some("not-a-number")).code, EXIT_INPUT);
    }

    #[test]
    fn verify_report_round_trips() {
        let out = run(["spinchsh", "verify", "--random", "4", "--seed", "2"], None);
        assert_eq!(out.code, EXIT_OK);
        let report: VerifyReport = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(report.samples, 4);
        assert_eq!(to_json(&report), out.stdout);
    }
}
