//! Numerical tolerances shared by every module.

/// Tolerance settings. `Tolerances::default()` holds the values used
/// throughout the crate; tests may tighten or loosen individual knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Unit-norm check for `UnitVector3` after construction.
    pub unit_norm: f64,
    /// Accepted deviation of user-supplied direction norms before rejection.
    pub normalization: f64,
    /// Orthogonality and determinant checks for rotations.
    pub rotation: f64,
    /// Hermiticity of matrices entering the eigensolver.
    pub hermitian: f64,
    /// Rank-2 test on the third singular value.
    pub rank: f64,
    /// Reconstruction residual of the canonical form.
    pub reconstruction: f64,
    /// Imaginary part allowed in `tr(rho B)`.
    pub expectation_imag: f64,
    /// Half-width of the band around 2 for certified operator norms.
    pub norm_band: f64,
    /// Allowed decrease of the seesaw objective before it counts as a bug.
    pub monotone_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT
    }
}

pub const DEFAULT: Tolerances = Tolerances {
    unit_norm: 1e-12,
    normalization: 1e-9,
    rotation: 1e-12,
    hermitian: 1e-10,
    rank: 1e-8,
    reconstruction: 1e-10,
    expectation_imag: 1e-10,
    norm_band: 1e-9,
    monotone_slack: 1e-12,
};
