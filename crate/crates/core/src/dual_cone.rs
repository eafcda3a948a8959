//! Membership in the dual SONC cone, the dual SAGE cone, and the closed-form
//! quartic descriptions used as oracles.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::circuits::{enumerate_circuits, Circuit, CircuitCatalog, CircuitError};
use crate::entropy_kernel::{xlogx_over, EntropyValue};
use crate::poly_support::{DualVector, ExponentVector, PolyError, SupportSet};
use crate::simplex::{lp_min_infeasibility, LpError, MinimaxRow, MinimaxSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("exponent {0} is not indexed by the dual vector")]
    NotIndexed(ExponentVector),
    #[error("dual vector support does not match the given support")]
    SupportMismatch,
    #[error("dual SAGE vectors must be nonnegative, found {0}")]
    Negative(f64),
    #[error("tolerance must be finite and nonnegative")]
    BadTolerance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualConfig {
    pub tol: f64,
    /// Also search `v* ≥ v_β` for even `β` instead of fixing `v* = v_β`.
    pub even_beta_search: bool,
    pub golden_iterations: usize,
}

impl Default for DualConfig {
    fn default() -> Self {
        DualConfig {
            tol: 1e-9,
            even_beta_search: false,
            golden_iterations: 200,
        }
    }
}

impl DualConfig {
    pub fn with_tol(tol: f64) -> Self {
        DualConfig {
            tol,
            ..DualConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualWitness {
    pub circuit_id: usize,
    pub v_star: f64,
    pub tau: Vec<f64>,
}

impl DualWitness {
    pub fn to_json_value(&self) -> Value {
        json!({"circuit": self.circuit_id, "v_star": self.v_star, "tau": self.tau})
    }
}

/// Result of testing a single circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitDualOutcome {
    pub member: bool,
    /// `(v*, τ)` when member.
    pub witness: Option<(f64, Vec<f64>)>,
    /// Smallest `φ(v*)` seen by the search.
    pub phi_min: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipReport {
    pub member: bool,
    pub witnesses: Vec<DualWitness>,
    pub violated_circuit: Option<(usize, Circuit)>,
}

impl MembershipReport {
    pub fn to_json_value(&self) -> Value {
        let violated = match &self.violated_circuit {
            None => Value::Null,
            Some((id, c)) => {
                let mut m = Map::new();
                m.insert("id".into(), json!(id));
                if let Value::Object(rest) = c.to_json_value() {
                    m.extend(rest);
                }
                Value::Object(m)
            }
        };
        json!({
            "member": self.member,
            "witnesses": self.witnesses.iter().map(DualWitness::to_json_value).collect::<Vec<_>>(),
            "violated_circuit": violated,
        })
    }
}

fn check_tol(tol: f64) -> Result<(), DualError> {
    if tol.is_finite() && tol >= 0.0 {
        Ok(())
    } else {
        Err(DualError::BadTolerance)
    }
}

fn value_at(v: &DualVector, e: &ExponentVector) -> Result<f64, DualError> {
    v.get(e).ok_or_else(|| DualError::NotIndexed(e.clone()))
}

fn entropy_f64(e: EntropyValue) -> f64 {
    e.to_f64()
}

fn circuit_rows(circuit: &Circuit, vertex_values: &[f64], v_star: f64) -> Vec<MinimaxRow> {
    let beta = circuit.inner().entries();
    circuit
        .vertices()
        .iter()
        .zip(vertex_values)
        .map(|(alpha, &vj)| MinimaxRow {
            a: beta
                .iter()
                .zip(alpha.entries())
                .map(|(&b, &a)| b as f64 - a as f64)
                .collect(),
            b: entropy_f64(xlogx_over(v_star, vj)),
        })
        .collect()
}

fn phi(circuit: &Circuit, vertex_values: &[f64], v_star: f64) -> Result<MinimaxSolution, DualError> {
    Ok(lp_min_infeasibility(&circuit_rows(circuit, vertex_values, v_star))?)
}

/// `φ(v*) = min_τ max_j (v*·log(v*/v_{α(j)}) − (β − α(j))ᵀτ)`.
pub fn dual_infeasibility(circuit: &Circuit, v: &DualVector, v_star: f64) -> Result<f64, DualError> {
    let values = vertex_values(circuit, v)?;
    Ok(phi(circuit, &values, v_star)?.t_min)
}

fn vertex_values(circuit: &Circuit, v: &DualVector) -> Result<Vec<f64>, DualError> {
    circuit
        .vertices()
        .iter()
        .map(|a| value_at(v, a).map(|x| x.max(0.0)))
        .collect()
}

/// Tests the per-circuit condition with the default search settings.
pub fn circuit_dual_membership(
    circuit: &Circuit,
    v: &DualVector,
    tol: f64,
) -> Result<CircuitDualOutcome, DualError> {
    circuit_dual_membership_with(circuit, v, &DualConfig::with_tol(tol))
}

pub fn circuit_dual_membership_with(
    circuit: &Circuit,
    v: &DualVector,
    config: &DualConfig,
) -> Result<CircuitDualOutcome, DualError> {
    check_tol(config.tol)?;
    let raw: Vec<f64> = circuit
        .vertices()
        .iter()
        .map(|a| value_at(v, a))
        .collect::<Result<_, _>>()?;
    let v_beta = value_at(v, circuit.inner())?;
    let scale = raw.iter().chain(std::iter::once(&v_beta)).fold(0.0f64, |s, x| s.max(x.abs()));
    let tol = config.tol * scale;
    let reject = |phi_min: f64| CircuitDualOutcome {
        member: false,
        witness: None,
        phi_min,
    };
    if raw.iter().any(|&x| x < -tol) {
        return Ok(reject(f64::INFINITY));
    }
    if scale == 0.0 {
        return Ok(CircuitDualOutcome {
            member: true,
            witness: Some((0.0, vec![0.0; circuit.dim()])),
            phi_min: 0.0,
        });
    }
    let values: Vec<f64> = raw.iter().map(|x| x.max(0.0)).collect();

    let lo = if circuit.beta_even() {
        if v_beta < -tol {
            return Ok(reject(f64::INFINITY));
        }
        v_beta.max(0.0)
    } else {
        v_beta.abs()
    };
    let accept = |s: MinimaxSolution, v_star: f64| CircuitDualOutcome {
        member: true,
        phi_min: s.t_min,
        witness: Some((v_star, s.tau)),
    };

    let first = phi(circuit, &values, lo)?;
    if first.t_min <= tol {
        return Ok(accept(first, lo));
    }
    if circuit.beta_even() && !config.even_beta_search {
        return Ok(reject(first.t_min));
    }

    // golden-section search over the convex function φ on [lo, hi]
    let vmax = values.iter().fold(0.0f64, |m, &x| m.max(x));
    let hi = 2.0 * lo.max(std::f64::consts::E * vmax);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut best = (first.t_min, lo, first);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = phi(circuit, &values, x1)?;
    let mut f2 = phi(circuit, &values, x2)?;
    for _ in 0..config.golden_iterations {
        for (x, f) in [(x1, &f1), (x2, &f2)] {
            if f.t_min < best.0 {
                best = (f.t_min, x, f.clone());
            }
        }
        if best.0 <= tol || b - a <= f64::EPSILON * hi {
            break;
        }
        if f1.t_min <= f2.t_min {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = phi(circuit, &values, x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = phi(circuit, &values, x2)?;
        }
    }
    let (value, v_star, sol) = best;
    if value <= tol {
        Ok(accept(sol, v_star))
    } else {
        Ok(reject(value))
    }
}

/// Re-checks a witness against the defining inequalities.
pub fn verify_dual_witness(
    circuit: &Circuit,
    v: &DualVector,
    v_star: f64,
    tau: &[f64],
    tol: f64,
) -> Result<bool, DualError> {
    let values = vertex_values(circuit, v)?;
    let v_beta = value_at(v, circuit.inner())?;
    if tau.len() != circuit.dim() || !(v_star >= 0.0) || v_star < v_beta.abs() - 1e-12 {
        return Ok(false);
    }
    let scale = values.iter().fold(v_beta.abs(), |s, x| s.max(x.abs()));
    let rows = circuit_rows(circuit, &values, v_star);
    Ok(rows.iter().all(|r| {
        let rhs: f64 = r.a.iter().zip(tau).map(|(a, t)| a * t).sum();
        r.b <= rhs + tol * scale.max(f64::MIN_POSITIVE)
    }))
}

/// Full dual SONC test over `A`, enumerating its circuits.
pub fn sonc_dual_membership(
    support: &SupportSet,
    v: &DualVector,
    tol: f64,
) -> Result<MembershipReport, DualError> {
    if v.support() != support {
        return Err(DualError::SupportMismatch);
    }
    let catalog = enumerate_circuits(support)?;
    sonc_dual_membership_with_catalog(&catalog, v, &DualConfig::with_tol(tol))
}

pub fn sonc_dual_membership_with_catalog(
    catalog: &CircuitCatalog,
    v: &DualVector,
    config: &DualConfig,
) -> Result<MembershipReport, DualError> {
    check_tol(config.tol)?;
    if v.support() != catalog.support() {
        return Err(DualError::SupportMismatch);
    }
    let even_tol = config.tol * v.max_abs();
    for (id, c) in catalog.circuits().iter().enumerate() {
        if c.arity() == 1 && value_at(v, c.inner())? < -even_tol {
            return Ok(MembershipReport {
                member: false,
                witnesses: Vec::new(),
                violated_circuit: Some((id, c.clone())),
            });
        }
    }
    let mut witnesses = Vec::new();
    for (id, c) in catalog.proper() {
        let out = circuit_dual_membership_with(c, v, config)?;
        match out.witness {
            Some((v_star, tau)) if out.member => witnesses.push(DualWitness {
                circuit_id: id,
                v_star,
                tau,
            }),
            _ => {
                return Ok(MembershipReport {
                    member: false,
                    witnesses: Vec::new(),
                    violated_circuit: Some((id, c.clone())),
                })
            }
        }
    }
    Ok(MembershipReport {
        member: true,
        witnesses,
        violated_circuit: None,
    })
}

fn quartic_scale(v: &[f64; 5]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs())).powi(4).max(1.0)
}

/// The eight inequalities describing the dual SONC cone of univariate quartics,
/// each of which must be `≥ 0`.
pub fn quartic_inequality_values(v: &[f64; 5]) -> [f64; 8] {
    let [v0, v1, v2, v3, v4] = *v;
    [
        v0,
        v2,
        v4,
        v0 * v2 - v1 * v1,
        v0.powi(3) * v4 - v1.powi(4),
        v0 * v4 - v2 * v2,
        v0 * v4.powi(3) - v3.powi(4),
        v2 * v4 - v3 * v3,
    ]
}

pub fn quartic_dual_membership(v: &[f64; 5], tol: f64) -> bool {
    let eps = tol * quartic_scale(v);
    quartic_inequality_values(v).iter().all(|&g| g >= -eps)
}

/// Principal minors of the 3×3 Hankel matrix of `v`: diagonal, the three 2×2
/// minors, then the determinant.
pub fn hankel_minor_values(v: &[f64; 5]) -> [f64; 7] {
    let [v0, v1, v2, v3, v4] = *v;
    [
        v0,
        v2,
        v4,
        v0 * v2 - v1 * v1,
        v0 * v4 - v2 * v2,
        v2 * v4 - v3 * v3,
        v0 * v2 * v4 + 2.0 * v1 * v2 * v3 - v2.powi(3) - v0 * v3 * v3 - v1 * v1 * v4,
    ]
}

pub fn psd_dual_quartic(v: &[f64; 5], tol: f64) -> bool {
    let eps = tol * quartic_scale(v);
    hankel_minor_values(v).iter().all(|&g| g >= -eps)
}

/// Dual SAGE test: for every `i`, some `τ(i)` satisfies
/// `v_i log(v_i/v_j) ≤ (α(i) − α(j))ᵀτ(i)` for all `j ≠ i`.
pub fn sage_dual_membership(support: &SupportSet, v: &DualVector, tol: f64) -> Result<bool, DualError> {
    check_tol(tol)?;
    if v.support() != support {
        return Err(DualError::SupportMismatch);
    }
    if let Some(&bad) = v.values().iter().find(|&&x| !(x >= 0.0)) {
        return Err(DualError::Negative(bad));
    }
    let eps = tol * v.max_abs();
    let points = support.points();
    let vals = v.values();
    for (i, ai) in points.iter().enumerate() {
        let rows: Vec<MinimaxRow> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, aj)| MinimaxRow {
                a: ai
                    .entries()
                    .iter()
                    .zip(aj.entries())
                    .map(|(&x, &y)| x as f64 - y as f64)
                    .collect(),
                b: entropy_f64(xlogx_over(vals[i], vals[j])),
            })
            .collect();
        if rows.is_empty() {
            continue;
        }
        if lp_min_infeasibility(&rows)?.t_min > eps {
            return Ok(false);
        }
    }
    Ok(true)
}
