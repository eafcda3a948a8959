//! Circuits of a support set: even affinely independent vertices together with
//! an inner lattice point in the relative interior of their convex hull.
//!
//! Barycentric coordinates are computed in exact rational arithmetic, so the
//! relative-interior test never depends on a floating point tolerance.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::json;
use thiserror::Error;

use crate::poly_support::{ExponentVector, SupportSet};

/// Default cap on the number of even points considered by the enumerator.
pub const DEFAULT_EVEN_POINT_CAP: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("vertices are affinely dependent")]
    AffinelyDependent,
    #[error("no vertices given")]
    NoVertices,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("support has {count} even points, more than the cap of {cap}")]
    TooManyEvenPoints { count: usize, cap: usize },
    #[error("expected {expected} coefficients, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("coefficient {0} is not positive")]
    NonPositiveCoefficient(f64),
    #[error("invalid circuit: {0}")]
    Invalid(String),
}

/// A circuit `(α(1), …, α(k); β)` with its exact barycentric coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    vertices: Vec<ExponentVector>,
    inner: ExponentVector,
    barycentric: Vec<BigRational>,
    mu: Vec<f64>,
    beta_even: bool,
}

impl Circuit {
    /// Validates and builds a circuit. Vertices are sorted into canonical order.
    pub fn new(mut vertices: Vec<ExponentVector>, inner: ExponentVector) -> Result<Self, CircuitError> {
        vertices.sort();
        vertices.dedup();
        if let Some(odd) = vertices.iter().find(|v| !v.is_even()) {
            return Err(CircuitError::Invalid(format!("vertex {odd} is not even")));
        }
        let n = inner.dim();
        if vertices.len() > n + 1 {
            return Err(CircuitError::AffinelyDependent);
        }
        let mu = barycentric_coordinates(&vertices, &inner)?.ok_or_else(|| {
            CircuitError::Invalid(format!(
                "{inner} is not in the relative interior of the vertex hull"
            ))
        })?;
        Ok(Self::from_parts(vertices, inner, mu))
    }

    fn from_parts(vertices: Vec<ExponentVector>, inner: ExponentVector, barycentric: Vec<BigRational>) -> Self {
        let mu = barycentric.iter().map(rational_to_f64).collect();
        let beta_even = inner.is_even();
        Circuit {
            vertices,
            inner,
            barycentric,
            mu,
            beta_even,
        }
    }

    /// The single-vertex circuit of an even point.
    pub fn monomial(alpha: ExponentVector) -> Result<Self, CircuitError> {
        Circuit::new(vec![alpha.clone()], alpha)
    }

    pub fn vertices(&self) -> &[ExponentVector] {
        &self.vertices
    }

    pub fn inner(&self) -> &ExponentVector {
        &self.inner
    }

    pub fn barycentric(&self) -> &[BigRational] {
        &self.barycentric
    }

    /// Barycentric coordinates rounded to `f64`.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn beta_even(&self) -> bool {
        self.beta_even
    }

    /// Number of vertices `k`.
    pub fn arity(&self) -> usize {
        self.vertices.len()
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "vertices": self.vertices,
            "beta": self.inner,
            "mu": self.barycentric.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
            "beta_even": self.beta_even,
        })
    }
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => q.to_f64().unwrap_or(f64::NAN),
    }
}

fn int(e: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(e))
}

/// Row-reduces `m` in place; returns the pivot column of each pivot row.
fn row_reduce(m: &mut [Vec<BigRational>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == m.len() {
            break;
        }
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for v in m[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..m[r].len() {
                    let d = &f * &m[row][c];
                    m[r][c] -= d;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Exact rank test for affine independence of a point list.
pub fn affinely_independent(points: &[ExponentVector]) -> bool {
    let Some(first) = points.first() else {
        return true;
    };
    let n = first.dim();
    if points.len() > n + 1 {
        return false;
    }
    let mut m: Vec<Vec<BigRational>> = (0..=n)
        .map(|row| {
            points
                .iter()
                .map(|p| if row < n { int(p.entries()[row]) } else { BigRational::one() })
                .collect()
        })
        .collect();
    row_reduce(&mut m, points.len()).len() == points.len()
}

/// Barycentric coordinates of `beta` with respect to `vertices`.
///
/// Returns `Ok(None)` when `beta` is not in the relative interior of the
/// convex hull, and an error when the vertices are affinely dependent.
pub fn barycentric_coordinates(
    vertices: &[ExponentVector],
    beta: &ExponentVector,
) -> Result<Option<Vec<BigRational>>, CircuitError> {
    let k = vertices.len();
    if k == 0 {
        return Err(CircuitError::NoVertices);
    }
    let n = beta.dim();
    if let Some(v) = vertices.iter().find(|v| v.dim() != n) {
        return Err(CircuitError::DimensionMismatch {
            expected: n,
            found: v.dim(),
        });
    }
    // (n+1) x (k+1) augmented system [α(1) … α(k) | β ; 1 … 1 | 1]
    let mut m: Vec<Vec<BigRational>> = (0..=n)
        .map(|row| {
            let mut r: Vec<BigRational> = vertices
                .iter()
                .map(|v| if row < n { int(v.entries()[row]) } else { BigRational::one() })
                .collect();
            r.push(if row < n { int(beta.entries()[row]) } else { BigRational::one() });
            r
        })
        .collect();
    let pivots = row_reduce(&mut m, k + 1);
    let rank = pivots.iter().filter(|&&c| c < k).count();
    if rank < k {
        return Err(CircuitError::AffinelyDependent);
    }
    if pivots.contains(&k) {
        // β is outside the affine hull
        return Ok(None);
    }
    let mu: Vec<BigRational> = (0..k).map(|i| m[i][k].clone()).collect();
    if mu.iter().all(|q| q.is_positive()) {
        Ok(Some(mu))
    } else {
        Ok(None)
    }
}

/// The union of `I_1(A), …, I_{n+1}(A)` in canonical `(k, vertices, β)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitCatalog {
    support: SupportSet,
    circuits: Vec<Circuit>,
}

impl CircuitCatalog {
    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn circuits(&self) -> &[Circuit] {
        &self.circuits
    }

    pub fn get(&self, id: usize) -> Option<&Circuit> {
        self.circuits.get(id)
    }

    pub fn len(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }

    /// Circuits with at least two vertices, paired with their catalog index.
    pub fn proper(&self) -> impl Iterator<Item = (usize, &Circuit)> {
        self.circuits.iter().enumerate().filter(|(_, c)| c.arity() >= 2)
    }

    /// Circuits with exactly `k` vertices.
    pub fn with_arity(&self, k: usize) -> impl Iterator<Item = &Circuit> {
        self.circuits.iter().filter(move |c| c.arity() == k)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "circuits": self.circuits.iter().map(Circuit::to_json_value).collect::<Vec<_>>(),
        })
    }
}

/// Enumerates every circuit of `support` with the default even-point cap.
pub fn enumerate_circuits(support: &SupportSet) -> Result<CircuitCatalog, CircuitError> {
    enumerate_circuits_with_cap(support, DEFAULT_EVEN_POINT_CAP)
}

pub fn enumerate_circuits_with_cap(
    support: &SupportSet,
    cap: usize,
) -> Result<CircuitCatalog, CircuitError> {
    let even: Vec<ExponentVector> = support.even_points().cloned().collect();
    if even.len() > cap {
        return Err(CircuitError::TooManyEvenPoints {
            count: even.len(),
            cap,
        });
    }
    let n = support.n();
    let mut circuits: Vec<Circuit> = even
        .iter()
        .map(|a| Circuit::from_parts(vec![a.clone()], a.clone(), vec![BigRational::one()]))
        .collect();

    // Depth-first over index-increasing subsets of E, pruning as soon as the
    // partial vertex set is affinely dependent.
    let mut stack: Vec<usize> = Vec::new();
    let mut found: Vec<Circuit> = Vec::new();
    extend_subsets(&even, support, n + 1, 0, &mut stack, &mut found);
    found.sort_by(|a, b| {
        a.arity()
            .cmp(&b.arity())
            .then_with(|| a.vertices.cmp(&b.vertices))
            .then_with(|| a.inner.cmp(&b.inner))
    });
    circuits.extend(found);
    Ok(CircuitCatalog {
        support: support.clone(),
        circuits,
    })
}

fn extend_subsets(
    even: &[ExponentVector],
    support: &SupportSet,
    max_k: usize,
    start: usize,
    stack: &mut Vec<usize>,
    out: &mut Vec<Circuit>,
) {
    for next in start..even.len() {
        stack.push(next);
        let vertices: Vec<ExponentVector> = stack.iter().map(|&i| even[i].clone()).collect();
        if affinely_independent(&vertices) {
            if vertices.len() >= 2 {
                for beta in support.points() {
                    if vertices.contains(beta) {
                        continue;
                    }
                    if let Ok(Some(mu)) = barycentric_coordinates(&vertices, beta) {
                        out.push(Circuit::from_parts(vertices.clone(), beta.clone(), mu));
                    }
                }
            }
            if vertices.len() < max_k {
                extend_subsets(even, support, max_k, next + 1, stack, out);
            }
        }
        stack.pop();
    }
}

/// The circuit number `Θ = Π (c_i/μ_i)^{μ_i}`, evaluated in the log domain.
pub fn circuit_number(c: &[f64], circuit: &Circuit) -> Result<f64, CircuitError> {
    Ok(log_circuit_number(c, circuit)?.exp())
}

/// `log Θ = Σ μ_i (log c_i − log μ_i)`.
pub fn log_circuit_number(c: &[f64], circuit: &Circuit) -> Result<f64, CircuitError> {
    if c.len() != circuit.arity() {
        return Err(CircuitError::ArityMismatch {
            expected: circuit.arity(),
            found: c.len(),
        });
    }
    if let Some(&bad) = c.iter().find(|&&ci| !(ci > 0.0) || !ci.is_finite()) {
        return Err(CircuitError::NonPositiveCoefficient(bad));
    }
    Ok(c.iter()
        .zip(&circuit.mu)
        .map(|(ci, mi)| mi * (ci.ln() - mi.ln()))
        .sum())
}
