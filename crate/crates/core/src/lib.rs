//! KMS states on Nica-Toeplitz algebras of path-space shifts of finite
//! k-graphs.

pub mod degree;
pub mod fixtures;
pub mod kgraph;
pub mod kms;
pub mod nt;
pub mod pathspace;
pub mod representations;
pub mod scalar;
pub mod thermo;

pub use degree::Degree;
pub use kgraph::{KGraph, KGraphError, Path};
pub use scalar::{Real, Scalar, Weight};

use num_complex::Complex;
use num_rational::BigRational;

/// Exact complex rationals, for identity checks.
pub type Exact = Complex<BigRational>;
/// Double-precision complex numbers, for state values.
pub type Numeric = Complex<f64>;
