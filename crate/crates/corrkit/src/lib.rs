//! Numerical toolkit for correlation monotones on finite multipartite
//! quantum systems.
//!
//! The crate models tensor-factorized density operators together with the
//! single-site operations that drive correlation orderings: deterministic
//! local channels, local measurements with grouped Kraus terms, Schmidt
//! decomposition and majorization, and a library of monotone measures
//! (total mutual information, entanglement of formation, Rényi entropy
//! families on Schmidt vectors, and a Bell-functional value computed by
//! see-saw optimization). On top of that sit explicit extremal-state
//! constructions and a randomized harness that stress-tests monotonicity
//! properties with seeded, replayable trials.
//!
//! Everything is dense and double precision; the intended scale is desk-size
//! Hilbert spaces (total dimension of a few dozen, hard-capped at 4096).
//! All randomness flows through explicit seeds, so every result is
//! reproducible bit for bit.

pub mod cli;
pub mod constructions;
mod error;
mod index;
pub mod harness;
pub mod monotones;
pub mod qstate;
pub mod schmidt;

pub use error::{Error, Result};

/// Hard cap on the total Hilbert space dimension of any constructed object.
pub const MAX_TOTAL_DIM: usize = 4096;

/// Centralized numerical tolerances. Everything tolerance-like in the crate
/// is pinned here rather than scattered through call sites.
pub mod tol {
    /// Max abs deviation from Hermitian symmetry accepted by state validation.
    pub const HERMITICITY: f64 = 1e-10;
    /// Accepted deviation of a density operator trace from one.
    pub const TRACE: f64 = 1e-10;
    /// Eigenvalues below this are a hard validation error.
    pub const MIN_EIGENVALUE: f64 = -1e-10;
    /// Spectrum weight below this magnitude is clipped to zero (and the
    /// remainder renormalized) before entropies, ranks, and purifications.
    pub const EIGENVALUE_CLIP: f64 = 1e-12;
    /// Frobenius tolerance on Kraus completeness sums.
    pub const COMPLETENESS: f64 = 1e-10;
    /// Accepted deviation of a pure-state norm from one.
    pub const UNIT_NORM: f64 = 1e-10;
    /// Measurement outcomes below this probability carry a null state marker.
    pub const PROBABILITY_FLOOR: f64 = 1e-12;
    /// Schmidt coefficients at or below this value do not count toward rank.
    pub const SCHMIDT_CUTOFF: f64 = 1e-12;
    /// Slack allowed on partial-sum comparisons in the majorization preorder.
    pub const MAJORIZATION: f64 = 1e-10;
    /// `1 - tr(rho^2)` at or below this counts as a pure state.
    pub const PURITY: f64 = 1e-9;
    /// Coefficient-wise tolerance when comparing Schmidt vectors.
    pub const COEFF_EQUALITY: f64 = 1e-9;
    /// Frobenius tolerance of the block-form recognizer used by the
    /// entanglement-of-formation evaluator on mixed states.
    pub const BLOCK_RECOGNIZER: f64 = 1e-8;
    /// Margin above which a harness trial counts as a monotonicity violation.
    pub const VIOLATION_THRESHOLD: f64 = 1e-8;
    /// Margin allowance for see-saw-backed monotones, whose evaluator is a
    /// lower bound and can therefore under-report the pre-operation value.
    pub const SEESAW_ALLOWANCE: f64 = 1e-4;
}
