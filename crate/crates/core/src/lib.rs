//! Certification toolkit for Hilbert points in finite discrete vector-valued
//! L^p spaces.
//!
//! A nontrivial field φ on a finite probability space is a *Hilbert point* for
//! the exponent p when ‖φ‖_p ≤ ‖φ + f‖_p for every field f that is orthogonal
//! to φ in the L² pairing. This crate certifies or refutes that property along
//! four independent routes (value-norm profile, rank-one projection norm,
//! first-order stationarity, convex minimization), classifies Rademacher sums
//! Σ ω_j x_j by the same property, and checks the vector-geometry lemmas the
//! classification rests on.
//!
//! Everything is generic over the floating-point scalar; `*64` aliases below
//! are the working precision used by the CLI and the test suite.

pub mod certify;
pub mod error;
pub mod gen;
pub mod geometry;
pub mod rademacher;
pub mod scalar;
pub mod schema;
pub mod space;
pub mod sweep;
mod vecmath;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use space::{Exponent, Field, ProbSpace};

pub type ProbSpace64 = ProbSpace<f64>;
pub type Field64 = Field<f64>;
pub type Exponent64 = Exponent<f64>;
/// Sign-sum coefficients over f64.
pub type RademacherSum64 = rademacher::RademacherSum<f64>;
pub type ProbSpace32 = ProbSpace<f32>;
pub type Field32 = Field<f32>;
pub type Exponent32 = Exponent<f32>;
