//! Stabilized finite differences for 2D Cartesian convection–diffusion.
//!
//! This crate implements the ADSC method (Adaptive Directional Sparse
//! Correction): a symmetric positive-semidefinite edge-diffusion correction
//! for the centered five-point discretization of
//!
//! ```text
//! −ε Δu + β·∇u = f   on (0,1)²,   u = 0 on the boundary,
//! ```
//!
//! driven by a directional non-monotonicity detector and sized by a local
//! Fourier (modal) balance rule. Alongside ADSC it provides:
//!
//! * [`grid`] — uniform and Shishkin tensor meshes, grid functions, discrete
//!   norms, and oscillation diagnostics (total variation, extrema violation,
//!   directional detector counts);
//! * [`sparse`] — CSR assembly, transposes, triple products `DᵀWD`, and a
//!   direct sparse LU solve;
//! * [`operators`] — the centered Galerkin operator plus six comparator
//!   discretizations (coordinate upwinding, SUPG, CIP-type, LPS-type,
//!   AFC-inspired) and all benchmark source terms;
//! * [`lfa`] — interior stencil symbols, the modal convection-dominance
//!   indicator ρ_pq, dominant sets, the modal-balance parameter rule, the
//!   rectified reference modal operator, and footprint sampling;
//! * [`adsc`] — detectors, activation transfer, the saturating γ-law, and
//!   the monotone activation iteration;
//! * [`bench`] — a named scenario registry reproducing the benchmark tables,
//!   with fine-grid or exact references and CSV/markdown emission;
//! * [`properties`] — the seeded structural property suite (skew-symmetry,
//!   PSD corrections, coercivity, orthonormality, symbol identity, …).
//!
//! All numerics are IEEE f64 (see [`Scalar`]); runs are deterministic and
//! emitted tables are byte-identical across reruns of the same
//! configuration.

pub mod adsc;
pub mod bench;
pub mod grid;
pub mod lfa;
pub mod operators;
pub mod properties;
pub mod sparse;

/// Scalar type used throughout the crate.
///
/// The solver stack, the calibrated tolerances, and the emitted 17-digit
/// tables are all double-precision; the alias documents that choice at the
/// crate root.
pub type Scalar = f64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on an argument was violated (e.g. `Ne < 2`).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Direct factorization failed: the matrix is singular to working
    /// precision.
    #[error("matrix is singular to working precision")]
    SingularMatrix,
    /// A linear solve finished but did not meet the requested residual
    /// contract; carries the best residual reached.
    #[error("linear solve missed tolerance: relative residual {residual:.3e} > {tol:.3e}")]
    SolveTolerance { residual: f64, tol: f64 },
    /// Operand shapes are not conformable.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
