//! Nonnegativity of circuit polynomials `Σ c_i x^{α(i)} + δ x^β` on the
//! positive orthant and on all of Rⁿ, with entropy witnesses.

use std::f64::consts::E;

use crate::circuits::{log_circuit_number, Circuit, CircuitError};
use crate::entropy_kernel::{entropy_minimizer, relative_entropy};
use crate::poly_support::{PolyError, SparsePolynomial};

/// Relative tolerance used for `δ` against `−Θ` and for witness checks.
pub const DECISION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitPolynomial {
    circuit: Circuit,
    c: Vec<f64>,
    delta: f64,
}

impl CircuitPolynomial {
    pub fn new(circuit: Circuit, c: Vec<f64>, delta: f64) -> Result<Self, CircuitError> {
        // arity and positivity are the circuit-number preconditions
        log_circuit_number(&c, &circuit)?;
        if !delta.is_finite() {
            return Err(CircuitError::Invalid("delta must be finite".into()));
        }
        Ok(CircuitPolynomial { circuit, c, delta })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn circuit_number(&self) -> f64 {
        log_circuit_number(&self.c, &self.circuit)
            .expect("validated at construction")
            .exp()
    }

    /// The polynomial itself. For `k = 1` the inner term merges into the vertex.
    pub fn to_polynomial(&self) -> SparsePolynomial {
        let n = self.circuit.dim();
        let terms = self
            .circuit
            .vertices()
            .iter()
            .cloned()
            .zip(self.c.iter().copied())
            .chain(std::iter::once((self.circuit.inner().clone(), self.delta)));
        SparsePolynomial::from_terms(n, terms).expect("finite coefficients")
    }

    /// Identifies `p` as a circuit polynomial, trying each term as the inner one.
    pub fn from_polynomial(p: &SparsePolynomial) -> Result<Self, PolyError> {
        let terms: Vec<_> = p.terms().map(|(e, c)| (e.clone(), c)).collect();
        for (i, (beta, delta)) in terms.iter().enumerate() {
            let rest: Vec<_> = terms
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, t)| t.clone())
                .collect();
            if rest.is_empty() || rest.iter().any(|(e, c)| !e.is_even() || *c <= 0.0) {
                continue;
            }
            let vertices: Vec<_> = rest.iter().map(|(e, _)| e.clone()).collect();
            let Ok(circuit) = Circuit::new(vertices, beta.clone()) else {
                continue;
            };
            // Circuit::new sorts vertices, and `rest` is already in canonical order
            let c: Vec<f64> = rest.iter().map(|(_, c)| *c).collect();
            if let Ok(cp) = CircuitPolynomial::new(circuit, c, *delta) {
                return Ok(cp);
            }
        }
        if terms.len() == 1 && terms[0].0.is_even() && terms[0].1 > 0.0 {
            let circuit = Circuit::monomial(terms[0].0.clone()).expect("even point");
            return Ok(CircuitPolynomial {
                circuit,
                c: vec![terms[0].1],
                delta: 0.0,
            });
        }
        Err(PolyError::Json("polynomial is not a circuit polynomial".into()))
    }
}

/// A vector `ν ≥ 0` certifying nonnegativity through the entropy condition.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyWitness {
    pub nu: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonnegDecision {
    pub nonneg: bool,
    pub theta: f64,
    pub witness: Option<EntropyWitness>,
}

fn theta_tol(theta: f64) -> f64 {
    DECISION_TOL * theta.max(1.0)
}

fn closed_form_witness(p: &CircuitPolynomial) -> EntropyWitness {
    let m = entropy_minimizer(&p.circuit, &p.c).expect("validated circuit polynomial");
    EntropyWitness { nu: m.nu_star }
}

/// Nonnegativity on R₊ⁿ: `δ ≥ −Θ`.
pub fn is_nonneg_on_positive_orthant(p: &CircuitPolynomial) -> NonnegDecision {
    let theta = p.circuit_number();
    let nonneg = p.delta >= -theta - theta_tol(theta);
    NonnegDecision {
        nonneg,
        theta,
        witness: nonneg.then(|| closed_form_witness(p)),
    }
}

/// Nonnegativity on Rⁿ: `|δ| ≤ Θ` for odd `β`, `δ ≥ −Θ` for even `β`.
pub fn is_nonneg_circuit(p: &CircuitPolynomial) -> NonnegDecision {
    if p.circuit.beta_even() {
        return is_nonneg_on_positive_orthant(p);
    }
    let theta = p.circuit_number();
    let nonneg = p.delta.abs() <= theta + theta_tol(theta);
    NonnegDecision {
        nonneg,
        theta,
        witness: nonneg.then(|| closed_form_witness(p)),
    }
}

/// Checks `Σ α(i) ν_i = (1ᵀν) β` and `D(ν, e·c) ≤ δ` (even `β`) or `≤ −|δ|` (odd `β`).
pub fn verify_entropy_witness(p: &CircuitPolynomial, w: &EntropyWitness) -> bool {
    let circuit = &p.circuit;
    if w.nu.len() != circuit.arity() || w.nu.iter().any(|v| !(*v >= 0.0)) {
        return false;
    }
    let total: f64 = w.nu.iter().sum();
    for d in 0..circuit.dim() {
        let lhs: f64 = circuit
            .vertices()
            .iter()
            .zip(&w.nu)
            .map(|(a, v)| a.entries()[d] as f64 * v)
            .sum();
        let rhs = total * circuit.inner().entries()[d] as f64;
        if (lhs - rhs).abs() > DECISION_TOL * lhs.abs().max(rhs.abs()).max(1.0) {
            return false;
        }
    }
    let ec: Vec<f64> = p.c.iter().map(|c| E * c).collect();
    let bound = if circuit.beta_even() {
        p.delta
    } else {
        -p.delta.abs()
    };
    match relative_entropy(&w.nu, &ec) {
        Ok(d) => d.le(bound + DECISION_TOL * bound.abs().max(1.0)),
        Err(_) => false,
    }
}
