//! Finite subdiagonal algebras on tracial matrix algebras.
//!
//! The crate instantiates block-upper-triangular subdiagonal algebras H∞
//! inside a finite matrix algebra with a weighted diagonal trace, and builds
//! on top of them:
//!
//! - the conjugation operator u ↦ ũ (the matrix analogue of the harmonic
//!   conjugate / Hilbert transform), analytic completion u + iũ, and the
//!   Riesz projection onto H^p ([`conjugation`]);
//! - generalized singular value functions μ_t, distribution functions λ_s,
//!   L^p and weak-L¹ (quasi)norms, functional calculus and triangular-unitary
//!   factorizations ([`spectral`]);
//! - explicit constants: the largest roots K_{2k} of the even-power bound
//!   polynomials and empirical L^p operator-norm estimates ([`constants`]);
//! - Szegő-type weighted least-squares infima with closed-form minimizers
//!   and a randomized explorer for the operator Jensen inequality
//!   ([`szego`]);
//! - a seeded property-test harness that exercises every inequality in the
//!   library and emits machine-readable reports ([`verify`]).

pub mod algebra;
pub mod cli;
pub mod conjugation;
pub mod constants;
pub mod error;
pub mod fixture;
mod linalg;
pub mod spectral;
pub mod szego;
pub mod verify;

pub use algebra::{BlockRegion, MatrixOperator, TracialAlgebra};
pub use error::{Error, Result};
