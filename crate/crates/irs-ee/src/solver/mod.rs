//! In-house small-scale convex solvers.
//!
//! Two entry points cover everything the optimization blocks need:
//!
//! - [`affine::solve_concave_affine`]: smooth concave maximization under
//!   affine inequality constraints (power control subproblems, feasibility
//!   LPs), with a phase-I helper for strictly feasible starts;
//! - [`psd::solve_psd_concave`]: concave maximization over a unit-diagonal
//!   Hermitian matrix block plus an auxiliary vector coupled through a
//!   Schur-complement PSD condition (the phase-shift SDP).
//!
//! Complex Hermitian structure is handled through the real lifting in
//! [`realify`]. Everything is dense; problem orders stay below ~40.

pub mod affine;
pub mod psd;
pub mod realify;

pub use affine::{
    solve_concave_affine, strictly_feasible_point, AffineIneqs, ConcaveOracle, KktReport,
    LogAffineObjective, Solution,
};
pub use psd::{solve_psd_concave, strictly_feasible_psd, PsdConcaveProblem, PsdLayout, PsdSolution};
pub use realify::{derealify, hermitian_inverse, hermitian_logdet, realify, realify_vector};
