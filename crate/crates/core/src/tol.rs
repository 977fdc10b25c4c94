//! Numerical tolerances and stability constants, collected in one place.
//!
//! Every budget that the library or its test suite relies on is named here,
//! so the margins are documented and auditable rather than scattered as
//! magic numbers.

/// Recomputing the Gaussian normalization Ξ from the exponent coefficients
/// must reproduce the stored value this closely (absolute).
pub const XI_CONSISTENCY: f64 = 1e-12;

/// Componentwise agreement between the closed-form coefficient evolution and
/// a fixed-step RK4 integration of the coefficient ODE system.
pub const ODE_VS_CLOSED_FORM: f64 = 1e-7;

/// The products α₁β₁ and α₂β₂ stay equal to 1/16 along any trajectory that
/// starts from a two-mode squeezed vacuum (absolute).
pub const PRODUCT_INVARIANT: f64 = 1e-10;

/// Evolving with equal gain and loss must match the limit of slightly
/// detuned rates (checked at a detuning of 1e-6).
pub const GL_CONTINUITY: f64 = 1e-4;

/// An eigenvalue counts as "zero at the critical time" when its magnitude is
/// below this factor times the surviving n = 0 eigenvalue of the same block.
pub const ROOT_TOL_REL: f64 = 1e-10;

/// Default budget for probability mass lost to Fock-space truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

/// Fixed-step RK4 stability heuristic: (G + L) · nmax · dt must not exceed
/// this constant (the stiffest rate in the element ODEs scales with
/// (G + L) · (n + m + p + q)).
pub const RK4_STABILITY: f64 = 0.05;

/// Elementwise agreement between the analytic spectral reconstruction of the
/// partially transposed state and its brute-force RK4 integration.
pub const CROSS_PATH: f64 = 1e-6;

/// Tr(ρ·W) must reproduce the corresponding eigenvalue this closely.
pub const WITNESS_IDENTITY: f64 = 1e-8;

/// Witness expectations on sampled separable states may go this far negative
/// before counting as a violation (pure float noise allowance).
pub const SEPARABLE_SLACK: f64 = 1e-12;

/// Slack when asserting that the total negativity is non-increasing on a
/// sampled time grid.
pub const MONOTONIC_SLACK: f64 = 1e-12;

/// A matrix handed to the block diagonalizer may deviate from exact symmetry
/// by at most this much (absolute, elementwise).
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Numerically computed block eigenvalues closer than this (relative to the
/// spectral scale) are treated as one degenerate cluster, inside which the
/// eigenvectors are realigned onto the closed-form basis — an eigensolver is
/// free to return any orthonormal basis of a degenerate subspace.
pub const EIGEN_DEGENERACY: f64 = 1e-10;
