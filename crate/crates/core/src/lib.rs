//! Jacobi spectral solver for radially decreasing ground states of the
//! fractional plasma equation `(-Δ)^s u = a (u - C)_+^p` on `R^N`.
//!
//! The density `ρ = (-Δ)^s u` is expanded on the unit ball in weighted Jacobi
//! polynomials `(1-|x|²)^{-s} P_n^{(-s, N/2-1)}(2|x|²-1)`, whose Riesz
//! potentials are known in closed form. The nonlinear equation then reduces
//! to a finite algebraic system for the coefficients and the amplitude `a`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod groundstate;
pub mod riesz_basis;
pub mod solver;
pub mod specfun;
pub mod validation;

pub use error::{Error, Result};
pub use groundstate::GroundStateSolution;
pub use riesz_basis::{BasisParams, SpectralCoefficients};
pub use solver::{ProblemParams, SolveDiagnostics};
