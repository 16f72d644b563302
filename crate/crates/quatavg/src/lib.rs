//! Exact and high-precision computations on definite rational quaternion
//! algebras: ideal class sets, weighted Brandt / Hecke / Atkin–Lehner
//! matrices on polynomial fibers, trilinear and toric periods, and
//! verification of explicit average formulas for central triple-product
//! L-values.
//!
//! The crate is organized bottom-up:
//!
//! * [`arith`] — integers, rationals, factorization, Kronecker symbols,
//!   and exact arithmetic in the cyclotomic field Q(ζ12).
//! * [`hp`] — arbitrary-precision floats (MPFR via `rug`) and a small
//!   complex type built on them.
//! * [`linalg`] — dense complex matrices and a Jacobi eigensolver for
//!   Hermitian matrices at high precision.
//! * [`localsym`] — Hilbert symbols over R and Q_p, ramification sets,
//!   discriminants, presentation search, and local embedding criteria.
//! * [`su2rep`] — symmetric-power representations of the unit quaternions:
//!   invariant trilinear tensors, their norms, archimedean orbit
//!   coefficients, and admissible unramified characters of CM fields.
//! * [`quatlat`] — exact lattice arithmetic inside a quaternion algebra:
//!   Hermite normal forms, orders, reduced discriminants, maximal orders,
//!   short vectors (Fincke–Pohst), right ideal classes, unit groups.
//! * [`brandt`] — weight spaces over the class set, Brandt matrices with
//!   classical eigenvalue normalization, Atkin–Lehner involutions, and
//!   joint eigenform extraction.
//! * [`periods`] — Petersson norms, trilinear periods, central L-value
//!   ratios, toric periods against CM fields, and spectral ratios for
//!   quadratic base-change L-values.
//! * [`verify`] — both sides of the average formulas: spectral sums over
//!   eigenform pairs versus closed geometric evaluations, triple-average
//!   tables, and algebraic normalizations of the central values.

pub mod arith;
pub mod brandt;
pub mod hp;
pub mod linalg;
pub mod localsym;
pub mod periods;
pub mod quatlat;
pub mod su2rep;
pub mod verify;

pub use arith::Cyclo12;
pub use brandt::{class_set, dim_newforms, eigenforms, weight_space, ClassSet, Eigenform, WeightSpace};
pub use hp::Cx;
pub use localsym::QuatPresentation;
pub use periods::PeriodCtx;
pub use verify::{
    classify_level, sum_over_three, verify_main, LevelType, Sum3Report, VerificationReport,
};

/// Default working precision in bits for all floating-point computation.
pub const DEFAULT_PREC: u32 = 128;

/// Errors surfaced by the top-level library API.
///
/// Internal invariant violations panic instead; `Error` is reserved for
/// conditions a caller can reasonably hit with valid-looking input.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The requested level is outside the supported domain
    /// (square-free, odd number of prime factors, within search bounds).
    #[error("unsupported level {0}: {1}")]
    Level(u64, String),
    /// The requested weight is outside the supported domain.
    #[error("unsupported weight {0}: {1}")]
    Weight(u32, String),
    /// An argument is outside the mathematical domain of the operation
    /// (mismatched weights, inadmissible character data, missing signs).
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical procedure failed to reach its target accuracy.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Joint diagonalization could not separate the spectrum.
    #[error("eigenform separation failed: {0}")]
    Separation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
