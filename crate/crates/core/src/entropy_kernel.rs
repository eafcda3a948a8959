//! Relative entropy, the exponential cone and its dual.
//!
//! Extended values follow the conventions `0·log(0/y) = 0`, `0·log(0/0) = 0`
//! and `y·log(y/0) = +∞` for `y > 0`. No operation here returns NaN.

use std::f64::consts::E;
use std::fmt;
use std::ops::Add;

use thiserror::Error;

use crate::circuits::{log_circuit_number, Circuit, CircuitError};

/// Absolute tolerance used by cone membership tests unless told otherwise.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("entries must be nonnegative, got {0}")]
    Negative(f64),
    #[error("entries must be positive, got {0}")]
    NonPositive(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// A value in `R ∪ {+∞}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EntropyValue {
    Finite(f64),
    PosInfinity,
}

impl EntropyValue {
    pub fn is_finite(self) -> bool {
        matches!(self, EntropyValue::Finite(_))
    }

    /// `+∞` maps to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            EntropyValue::Finite(v) => v,
            EntropyValue::PosInfinity => f64::INFINITY,
        }
    }

    pub fn le(self, bound: f64) -> bool {
        match self {
            EntropyValue::Finite(v) => v <= bound,
            EntropyValue::PosInfinity => false,
        }
    }
}

impl Add for EntropyValue {
    type Output = EntropyValue;

    fn add(self, rhs: EntropyValue) -> EntropyValue {
        match (self, rhs) {
            (EntropyValue::Finite(a), EntropyValue::Finite(b)) => EntropyValue::Finite(a + b),
            _ => EntropyValue::PosInfinity,
        }
    }
}

impl fmt::Display for EntropyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyValue::Finite(v) => write!(f, "{v}"),
            EntropyValue::PosInfinity => write!(f, "+inf"),
        }
    }
}

/// `y·log(y/z)` for `y, z ≥ 0` with the extended conventions.
pub fn xlogx_over(y: f64, z: f64) -> EntropyValue {
    if y == 0.0 {
        EntropyValue::Finite(0.0)
    } else if z == 0.0 {
        EntropyValue::PosInfinity
    } else {
        EntropyValue::Finite(y * (y.ln() - z.ln()))
    }
}

/// `D(ν, λ) = Σ ν_j log(ν_j/λ_j)`.
pub fn relative_entropy(nu: &[f64], lambda: &[f64]) -> Result<EntropyValue, EntropyError> {
    if nu.len() != lambda.len() {
        return Err(EntropyError::LengthMismatch(nu.len(), lambda.len()));
    }
    if let Some(&bad) = nu.iter().chain(lambda).find(|&&v| !(v >= 0.0)) {
        return Err(EntropyError::Negative(bad));
    }
    Ok(nu
        .iter()
        .zip(lambda)
        .map(|(&y, &z)| xlogx_over(y, z))
        .fold(EntropyValue::Finite(0.0), Add::add))
}

/// A point of R³, read as `(x, y, z)` for the exponential cone and
/// `(a, b, c)` for its dual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConePoint3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ConePoint3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        ConePoint3 { x, y, z }
    }
}

/// Membership in `K_exp = cl{(x, y, z) : y·e^{x/y} ≤ z, y > 0}`.
///
/// For `y, z > 0` the defining inequality is tested in the rescaled log form
/// `x + y·log(y/z) ≤ tol`, which is homogeneous of degree one like the cone.
pub fn exp_cone_member(p: ConePoint3, tol: f64) -> bool {
    let ConePoint3 { x, y, z } = p;
    let boundary_ray = y.abs() <= tol && x <= tol && z >= -tol;
    if boundary_ray {
        return true;
    }
    if !(y > 0.0) {
        return false;
    }
    if z > 0.0 {
        x + y * (y.ln() - z.ln()) <= tol
    } else {
        // y·e^{x/y} > 0 ≥ z here; only the tolerance can rescue it
        let lhs = y * (x / y).exp();
        lhs.is_finite() && lhs <= z + tol
    }
}

/// Membership in the dual cone
/// `(K_exp)* = {(a, b, c) : a < 0, c ≥ −a·e^{b/a−1}} ∪ ({0} × R₊ × R₊)`.
///
/// For `a < 0, c > 0` the inequality is tested in the rescaled log form
/// `a − b + (−a)·log(−a/c) ≤ tol`.
pub fn exp_cone_dual_member(p: ConePoint3, tol: f64) -> bool {
    let ConePoint3 { x: a, y: b, z: c } = p;
    if a.abs() <= tol && b >= -tol && c >= -tol {
        return true;
    }
    if !(a < 0.0) || c < -tol {
        return false;
    }
    if c > 0.0 {
        a - b + (-a) * ((-a).ln() - c.ln()) <= tol
    } else {
        let rhs = -a * (b / a - 1.0).exp();
        rhs.is_finite() && c >= rhs - tol
    }
}

/// Evaluates both sides of `D(ν, λ) ≤ δ ⇔ (−δ, ν, λ) ∈ K_exp`.
pub fn entropy_iff_expcone(
    nu: f64,
    lambda: f64,
    delta: f64,
    tol: f64,
) -> Result<(bool, bool), EntropyError> {
    if !(nu > 0.0) {
        return Err(EntropyError::NonPositive(nu));
    }
    if !(lambda > 0.0) {
        return Err(EntropyError::NonPositive(lambda));
    }
    // same rounding as the cone side: compare D − δ against tol
    let entropy_side = match relative_entropy(&[nu], &[lambda])? {
        EntropyValue::Finite(d) => d - delta <= tol,
        EntropyValue::PosInfinity => false,
    };
    let cone_side = exp_cone_member(ConePoint3::new(-delta, nu, lambda), tol);
    Ok((entropy_side, cone_side))
}

/// Minimizer of `ν ↦ D(ν, e·c)` over the balanced ray `ν = ρ·μ`, and the
/// attained minimum.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyMinimum {
    pub nu_star: Vec<f64>,
    pub min_value: f64,
}

/// `ν* = e^{−D(μ, c)}·μ`; the minimum `D(ν*, e·c)` equals `−Θ`.
pub fn entropy_minimizer(circuit: &Circuit, c: &[f64]) -> Result<EntropyMinimum, EntropyError> {
    // validates arity and positivity; log Θ = −D(μ, c)
    let log_theta = log_circuit_number(c, circuit)?;
    let rho = log_theta.exp();
    let nu_star: Vec<f64> = circuit.mu().iter().map(|m| rho * m).collect();
    let ec: Vec<f64> = c.iter().map(|ci| E * ci).collect();
    let min_value = relative_entropy(&nu_star, &ec)?.to_f64();
    Ok(EntropyMinimum { nu_star, min_value })
}

/// `min_{t* ≥ |t|} t*·log(t*/s)` in closed form.
pub fn scalar_dual_minimum(s: f64, t: f64) -> EntropyValue {
    let t = t.abs();
    if s == 0.0 {
        return if t == 0.0 {
            EntropyValue::Finite(0.0)
        } else {
            EntropyValue::PosInfinity
        };
    }
    let stationary = s / E;
    if stationary >= t {
        EntropyValue::Finite(-stationary)
    } else {
        xlogx_over(t, s)
    }
}

/// `∃ t* ≥ |t|` with `t*·log(t*/s) ≤ r` (within `tol`).
pub fn scalar_dual_member(r: f64, s: f64, t: f64, tol: f64) -> Result<bool, EntropyError> {
    if !(s >= 0.0) {
        return Err(EntropyError::Negative(s));
    }
    Ok(scalar_dual_minimum(s, t).le(r + tol))
}
