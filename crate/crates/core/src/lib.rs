//! Spectral fractional Laplacian on intervals and rectangles.
//!
//! The discrete operator is `(−Δ_h)^s` for the five-point (three-point in
//! 1D) Dirichlet Laplacian, applied through its exact sine eigenbasis. On
//! top of it the crate provides:
//!
//! * obstacle problems `u ≥ ψ, Au ≥ f, (Au − f)(u − ψ) = 0` with projected
//!   SOR and an active-set oracle, plus Lewy–Stampacchia and comparison
//!   verifiers ([`obstacle`]);
//! * implicit Euler integration of `∂ₜu = [−(−Δ)^s u + f]₊` with step-law,
//!   energy, stability and asymptotic checks ([`evolution`]);
//! * a Caffarelli–Silvestre extension solver used to cross-check the
//!   operator through its Neumann trace ([`extension`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod extension;
pub mod grid;
pub mod obstacle;
pub mod operator;
pub mod random;
pub mod spectral;

pub use error::{Error, Result};
pub use evolution::{evolve, EvolutionState, Source, TimeGrid};
pub use grid::{DomainSpec, GridFunction};
pub use obstacle::{ObstacleProblem, SolverConfig, SolverMethod, VISolution};
pub use operator::FracOperator;
pub use spectral::EigenBasis;
