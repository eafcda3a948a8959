//! Sums of nonnegative circuit polynomials: circuit enumeration, nonnegativity
//! tests, dual cone membership and lower bounds for sparse polynomials.

pub mod circuits;
pub mod dual_cone;
pub mod entropy_kernel;
pub mod nonneg_circuit;
pub mod optimize;
pub mod poly_support;
pub mod simplex;

pub use circuits::{circuit_number, enumerate_circuits, Circuit, CircuitCatalog};
pub use poly_support::{
    evaluate, moment_vector, parse_polynomial, DualVector, ExponentVector, SparsePolynomial,
    SupportSet,
};
