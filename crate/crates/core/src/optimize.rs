//! Lower bounds for sparse polynomials: SONC decompositions of `p − γ`,
//! a dual program over the dual SONC cone, and optimizer recovery from
//! moment vectors.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::circuits::{enumerate_circuits, CircuitCatalog, CircuitError};
use crate::dual_cone::{sonc_dual_membership_with_catalog, DualConfig, DualError};
use crate::nonneg_circuit::{is_nonneg_circuit, CircuitPolynomial};
use crate::poly_support::{
    evaluate, moment_vector, DualVector, ExponentVector, PolyError, SparsePolynomial, SupportSet,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error("support of the polynomial is not contained in the catalog support")]
    SupportMismatch,
    #[error("dual solver found no feasible point (best objective {best_value:?})")]
    NonConvergence {
        best_value: Option<f64>,
        best: Option<DualVector>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptConfig {
    pub seed: u64,
    /// Newton steps per feasibility call.
    pub newton_budget: usize,
    pub bisection_iterations: usize,
    /// Bisection stops once the bracket is below `gap_tol · scale`.
    pub gap_tol: f64,
    /// Random starts for local minimization, on top of the fixed ones.
    pub random_starts: usize,
    /// Membership queries spent by the dual coordinate search.
    pub dual_budget: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            seed: 0,
            newton_budget: 400,
            bisection_iterations: 60,
            gap_tol: 1e-7,
            random_starts: 12,
            dual_budget: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificatePiece {
    pub circuit_id: usize,
    pub c: Vec<f64>,
    pub delta: f64,
}

/// `p − γ = Σ pieces + residual`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoncCertificate {
    pub gamma: f64,
    pub pieces: Vec<CertificatePiece>,
    pub residual: SparsePolynomial,
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

impl SoncCertificate {
    pub fn to_json_value(&self) -> Value {
        json!({
            "gamma": finite_or_null(self.gamma),
            "pieces": self.pieces.iter().map(|p| json!({
                "circuit": p.circuit_id,
                "c": p.c,
                "delta": p.delta,
            })).collect::<Vec<_>>(),
            "residual": self.residual.to_json_value(),
        })
    }

    /// The sum of pieces and residual as a polynomial.
    pub fn reconstruct(&self, catalog: &CircuitCatalog) -> Option<SparsePolynomial> {
        let n = catalog.support().n();
        let mut terms: Vec<(ExponentVector, f64)> =
            self.residual.terms().map(|(e, c)| (e.clone(), c)).collect();
        for piece in &self.pieces {
            let circuit = catalog.get(piece.circuit_id)?;
            if circuit.arity() != piece.c.len() {
                return None;
            }
            terms.extend(circuit.vertices().iter().cloned().zip(piece.c.iter().copied()));
            terms.push((circuit.inner().clone(), piece.delta));
        }
        SparsePolynomial::from_terms(n, terms).ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundStatus {
    Certified,
    DualOnly,
    OptimalityCertified,
    InfeasibleUnbounded,
}

impl BoundStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundStatus::Certified => "certified",
            BoundStatus::DualOnly => "dual_only",
            BoundStatus::OptimalityCertified => "optimality_certified",
            BoundStatus::InfeasibleUnbounded => "infeasible_unbounded",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundResult {
    pub p_sonc: f64,
    pub p_dual: f64,
    pub certificate: Option<SoncCertificate>,
    pub dual_point: Option<DualVector>,
    pub optimal_point: Option<Vec<f64>>,
    pub status: BoundStatus,
    /// Every `(γ, certified)` query made by the bisection, in order.
    pub trace: Vec<(f64, bool)>,
}

impl BoundResult {
    pub fn to_json_value(&self) -> Value {
        json!({
            "status": self.status.as_str(),
            "p_sonc": finite_or_null(self.p_sonc),
            "p_dual": finite_or_null(self.p_dual),
            "certificate": self.certificate.as_ref().map(SoncCertificate::to_json_value),
            "dual_point": self.dual_point.as_ref().map(DualVector::to_json_value),
            "optimal_point": self.optimal_point,
        })
    }
}

/// `1 + ‖coefficients‖∞`.
pub fn coefficient_scale(p: &SparsePolynomial) -> f64 {
    1.0 + p.max_abs_coefficient()
}

/// `supp(p) ∪ {0}`.
pub fn extended_support(p: &SparsePolynomial) -> SupportSet {
    let zero = ExponentVector::zeros(p.n());
    let s = p.support();
    if s.contains(&zero) {
        s
    } else {
        s.with_point(zero).expect("zero is new")
    }
}

// ---------------------------------------------------------------------------
// decomposition search

struct UsableCircuit {
    catalog_id: usize,
    need: usize,
    resources: Vec<usize>,
    mu: Vec<f64>,
    log_k: f64,
    first_var: usize,
}

struct Plan {
    resources: Vec<(ExponentVector, f64)>,
    needs: Vec<(ExponentVector, f64)>,
    circuits: Vec<UsableCircuit>,
    uses: Vec<Vec<usize>>,
    by_need: Vec<Vec<usize>>,
    nvars: usize,
}

impl Plan {
    fn lambda(&self) -> usize {
        self.nvars
    }

    fn barrier_terms(&self) -> usize {
        self.resources.len() + self.needs.len() + self.nvars
    }
}

/// Splits the terms of `q` into even positive resources and needs, and keeps
/// circuits whose vertices are resources and whose inner point is a need.
/// Returns `None` when some need has no such circuit.
fn plan(q: &SparsePolynomial, catalog: &CircuitCatalog) -> Option<Plan> {
    let mut resources = Vec::new();
    let mut needs = Vec::new();
    let mut res_index = BTreeMap::new();
    let mut need_index = BTreeMap::new();
    for (e, c) in q.terms() {
        if e.is_even() && c > 0.0 {
            res_index.insert(e.clone(), resources.len());
            resources.push((e.clone(), c));
        } else {
            need_index.insert(e.clone(), needs.len());
            needs.push((e.clone(), c));
        }
    }
    let mut circuits = Vec::new();
    let mut uses = vec![Vec::new(); resources.len()];
    let mut by_need = vec![Vec::new(); needs.len()];
    let mut nvars = 0;
    for (id, circuit) in catalog.proper() {
        let Some(&need) = need_index.get(circuit.inner()) else {
            continue;
        };
        let Some(res): Option<Vec<usize>> =
            circuit.vertices().iter().map(|v| res_index.get(v).copied()).collect()
        else {
            continue;
        };
        let mu = circuit.mu().to_vec();
        let cb = needs[need].1.abs();
        let log_k = res
            .iter()
            .zip(&mu)
            .map(|(&r, &m)| m * (resources[r].1 / m).ln())
            .sum::<f64>()
            - cb.ln();
        for (j, &r) in res.iter().enumerate() {
            uses[r].push(nvars + j);
        }
        by_need[need].push(circuits.len());
        circuits.push(UsableCircuit {
            catalog_id: id,
            need,
            resources: res,
            mu,
            log_k,
            first_var: nvars,
        });
        nvars += circuit.arity();
    }
    if by_need.iter().any(Vec::is_empty) {
        return None;
    }
    Some(Plan {
        resources,
        needs,
        circuits,
        uses,
        by_need,
        nvars,
    })
}

struct BarrierState {
    g: Vec<f64>,
    h: Vec<f64>,
    geo: Vec<f64>,
}

fn barrier_state(plan: &Plan, z: &[f64]) -> Option<BarrierState> {
    let lam = z[plan.lambda()];
    if z[..plan.nvars].iter().any(|&u| !(u > 0.0)) {
        return None;
    }
    let g: Vec<f64> = plan
        .uses
        .iter()
        .map(|vars| 1.0 - vars.iter().map(|&i| z[i]).sum::<f64>())
        .collect();
    if g.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    let geo: Vec<f64> = plan
        .circuits
        .iter()
        .map(|c| {
            let s: f64 = c
                .mu
                .iter()
                .enumerate()
                .map(|(j, m)| m * z[c.first_var + j].ln())
                .sum();
            (c.log_k + s).exp()
        })
        .collect();
    let h: Vec<f64> = plan
        .by_need
        .iter()
        .map(|cs| cs.iter().map(|&c| geo[c]).sum::<f64>() - lam)
        .collect();
    if h.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    Some(BarrierState { g, h, geo })
}

fn barrier_value(plan: &Plan, z: &[f64], t: f64, s: &BarrierState) -> f64 {
    t * z[plan.lambda()]
        + s.g.iter().map(|x| x.ln()).sum::<f64>()
        + s.h.iter().map(|x| x.ln()).sum::<f64>()
        + z[..plan.nvars].iter().map(|x| x.ln()).sum::<f64>()
}

fn barrier_derivatives(plan: &Plan, z: &[f64], t: f64, s: &BarrierState) -> (DVector<f64>, DMatrix<f64>) {
    let dim = plan.nvars + 1;
    let lam = plan.lambda();
    let mut grad = DVector::zeros(dim);
    let mut hess = DMatrix::zeros(dim, dim);
    grad[lam] = t;
    for i in 0..plan.nvars {
        grad[i] += 1.0 / z[i];
        hess[(i, i)] -= 1.0 / (z[i] * z[i]);
    }
    for (r, vars) in plan.uses.iter().enumerate() {
        let inv = 1.0 / s.g[r];
        for &i in vars {
            grad[i] -= inv;
            for &j in vars {
                hess[(i, j)] -= inv * inv;
            }
        }
    }
    for (b, cs) in plan.by_need.iter().enumerate() {
        let inv = 1.0 / s.h[b];
        // sparse gradient of h_b
        let mut dh: Vec<(usize, f64)> = vec![(lam, -1.0)];
        for &ci in cs {
            let c = &plan.circuits[ci];
            let gv = s.geo[ci];
            let k = c.mu.len();
            for a in 0..k {
                let ia = c.first_var + a;
                dh.push((ia, gv * c.mu[a] / z[ia]));
                for bb in 0..k {
                    let ib = c.first_var + bb;
                    let mut d2 = c.mu[a] * c.mu[bb];
                    if a == bb {
                        d2 -= c.mu[a];
                    }
                    hess[(ia, ib)] += inv * gv * d2 / (z[ia] * z[ib]);
                }
            }
        }
        for &(i, di) in &dh {
            grad[i] += inv * di;
            for &(j, dj) in &dh {
                hess[(i, j)] -= inv * inv * di * dj;
            }
        }
    }
    (grad, hess)
}

fn newton_direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Option<DVector<f64>> {
    let neg = -hess;
    let mut reg = 0.0;
    for _ in 0..8 {
        let mut m = neg.clone();
        if reg > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += reg;
            }
        }
        if let Some(ch) = Cholesky::new(m) {
            let d = ch.solve(grad);
            if d.iter().all(|x| x.is_finite()) {
                return Some(d);
            }
        }
        let diag = (0..neg.nrows()).fold(0.0f64, |s, i| s.max(neg[(i, i)].abs()));
        reg = if reg == 0.0 { 1e-12 * diag.max(1.0) } else { reg * 100.0 };
    }
    None
}

fn build_certificate(q: &SparsePolynomial, plan: &Plan, z: &[f64], s: &BarrierState) -> SoncCertificate {
    let mut pieces = Vec::with_capacity(plan.circuits.len());
    for (ci, c) in plan.circuits.iter().enumerate() {
        let (_, cb) = plan.needs[c.need];
        let total: f64 = plan.by_need[c.need].iter().map(|&k| s.geo[k]).sum();
        let coeffs = c
            .resources
            .iter()
            .enumerate()
            .map(|(j, &r)| plan.resources[r].1 * z[c.first_var + j])
            .collect();
        pieces.push(CertificatePiece {
            circuit_id: c.catalog_id,
            c: coeffs,
            delta: cb * s.geo[ci] / total,
        });
    }
    let residual = SparsePolynomial::from_terms(
        q.n(),
        plan.resources
            .iter()
            .zip(&s.g)
            .map(|((e, c), g)| (e.clone(), c * g)),
    )
    .expect("finite residual");
    SoncCertificate {
        gamma: 0.0,
        pieces,
        residual,
    }
}

/// Why a certificate fails the independent checker.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("piece {0} references an unknown circuit or has the wrong arity")]
    BadPiece(usize),
    #[error("piece {0} is not a nonnegative circuit polynomial")]
    NotNonneg(usize),
    #[error("residual term at {0} is not an even monomial with nonnegative coefficient")]
    Residual(ExponentVector),
    #[error("reconstruction differs from p − γ by {0}")]
    Mismatch(f64),
}

/// Re-checks a certificate for `p` without trusting the solver.
pub fn verify_certificate(
    p: &SparsePolynomial,
    cert: &SoncCertificate,
    catalog: &CircuitCatalog,
) -> Result<(), CertificateError> {
    for (i, piece) in cert.pieces.iter().enumerate() {
        let circuit = catalog.get(piece.circuit_id).ok_or(CertificateError::BadPiece(i))?;
        let cp = CircuitPolynomial::new(circuit.clone(), piece.c.clone(), piece.delta)
            .map_err(|_| CertificateError::BadPiece(i))?;
        if !is_nonneg_circuit(&cp).nonneg {
            return Err(CertificateError::NotNonneg(i));
        }
    }
    for (e, c) in cert.residual.terms() {
        if !e.is_even() || c < -1e-12 {
            return Err(CertificateError::Residual(e.clone()));
        }
    }
    let sum = cert.reconstruct(catalog).ok_or(CertificateError::BadPiece(0))?;
    let target = p.shift_constant(cert.gamma);
    let mut worst = 0.0f64;
    for (e, c) in target.terms() {
        worst = worst.max((c - sum.coefficient(e)).abs());
    }
    for (e, c) in sum.terms() {
        worst = worst.max((c - target.coefficient(e)).abs());
    }
    if worst > 1e-7 * coefficient_scale(p) {
        return Err(CertificateError::Mismatch(worst));
    }
    Ok(())
}

/// Searches for a SONC decomposition of `p` over the circuits of `catalog`.
///
/// `None` means no certificate was found within the budget. A returned
/// certificate has passed [`verify_certificate`].
pub fn sonc_feasibility(
    p: &SparsePolynomial,
    catalog: &CircuitCatalog,
) -> Result<Option<SoncCertificate>, OptError> {
    sonc_feasibility_with(p, catalog, &OptConfig::default())
}

pub fn sonc_feasibility_with(
    p: &SparsePolynomial,
    catalog: &CircuitCatalog,
    config: &OptConfig,
) -> Result<Option<SoncCertificate>, OptError> {
    if p.n() != catalog.support().n() || !p.support().is_subset_of(catalog.support()) && !p.is_zero() {
        return Err(OptError::SupportMismatch);
    }
    let Some(plan) = plan(p, catalog) else {
        return Ok(None);
    };
    let checked = |cert: SoncCertificate| verify_certificate(p, &cert, catalog).ok().map(|_| cert);

    if plan.needs.is_empty() {
        let residual = p.clone();
        return Ok(checked(SoncCertificate {
            gamma: 0.0,
            pieces: Vec::new(),
            residual,
        }));
    }

    // start: even split of each resource, λ at half the smallest need supply
    let mut z = vec![0.0; plan.nvars + 1];
    for vars in &plan.uses {
        for &i in vars {
            z[i] = 1.0 / (vars.len() as f64 + 1.0);
        }
    }
    z[plan.lambda()] = 0.0;
    let s0 = barrier_state(&plan, &z).or_else(|| {
        // geometric means may underflow; fall back to λ below every supply
        None
    });
    let supply = match &s0 {
        Some(s) => s.h.iter().fold(f64::INFINITY, |m, &x| m.min(x)),
        None => {
            let geo: Vec<f64> = plan
                .circuits
                .iter()
                .map(|c| {
                    let s: f64 = c.mu.iter().enumerate().map(|(j, m)| m * z[c.first_var + j].ln()).sum();
                    (c.log_k + s).exp()
                })
                .collect();
            plan.by_need
                .iter()
                .map(|cs| cs.iter().map(|&c| geo[c]).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        }
    };
    if !(supply > 0.0) {
        return Ok(None);
    }
    z[plan.lambda()] = 0.5 * supply;

    let m = plan.barrier_terms() as f64;
    let mut t = 1.0 / supply.max(1e-300);
    let mut steps = 0;
    let mut state = barrier_state(&plan, &z).expect("interior start");
    loop {
        // centering
        let mut centered = false;
        while steps < config.newton_budget {
            steps += 1;
            let (grad, hess) = barrier_derivatives(&plan, &z, t, &state);
            let Some(d) = newton_direction(&grad, &hess) else {
                break;
            };
            let decrement = grad.dot(&d);
            if decrement / 2.0 <= 1e-10 {
                centered = true;
                break;
            }
            let f0 = barrier_value(&plan, &z, t, &state);
            let mut step = 1.0;
            let mut accepted = false;
            while step > 1e-14 {
                let trial: Vec<f64> = z.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect();
                if let Some(ts) = barrier_state(&plan, &trial) {
                    if barrier_value(&plan, &trial, t, &ts) >= f0 + 0.25 * step * decrement {
                        z = trial;
                        state = ts;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                centered = true;
                break;
            }
            if z[plan.lambda()] >= 1.0 {
                if let Some(cert) = checked(build_certificate(p, &plan, &z, &state)) {
                    return Ok(Some(cert));
                }
            }
        }
        let lam = z[plan.lambda()];
        if centered && lam + 1.1 * m / t < 1.0 {
            return Ok(None);
        }
        if steps >= config.newton_budget || m / t < 1e-13 {
            break;
        }
        if centered {
            t *= 8.0;
        }
    }
    if z[plan.lambda()] >= 1.0 - 1e-10 {
        return Ok(checked(build_certificate(p, &plan, &z, &state)));
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// local minimization

const BOX: f64 = 10.0;

fn derivative_factor(alpha: &ExponentVector, x: &[f64], di: Option<usize>, dj: Option<usize>) -> f64 {
    let mut exps: Vec<i64> = alpha.entries().iter().map(|&e| e as i64).collect();
    let mut factor = 1.0;
    for d in [di, dj].into_iter().flatten() {
        factor *= exps[d] as f64;
        if factor == 0.0 {
            return 0.0;
        }
        exps[d] -= 1;
    }
    exps.iter().zip(x).fold(factor, |f, (&e, &xi)| f * xi.powi(e as i32))
}

fn value_grad_hess(p: &SparsePolynomial, x: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let n = x.len();
    let mut f = 0.0;
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    for (alpha, c) in p.terms() {
        f += c * alpha.monomial(x);
        for i in 0..n {
            if alpha.entries()[i] == 0 {
                continue;
            }
            g[i] += c * derivative_factor(alpha, x, Some(i), None);
            for j in i..n {
                let v = c * derivative_factor(alpha, x, Some(i), Some(j));
                h[(i, j)] += v;
                if i != j {
                    h[(j, i)] += v;
                }
            }
        }
    }
    (f, g, h)
}

fn value(p: &SparsePolynomial, x: &[f64]) -> f64 {
    evaluate(p, x).expect("dimension checked")
}

fn descend(p: &SparsePolynomial, mut x: Vec<f64>) -> (Vec<f64>, f64) {
    let clamp = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|xi| xi.clamp(-BOX, BOX)).collect() };
    let mut fx = value(p, &x);
    for _ in 0..300 {
        let (f, g, h) = value_grad_hess(p, &x);
        fx = f;
        let gnorm = g.amax();
        if gnorm <= 1e-13 * (1.0 + f.abs()) {
            break;
        }
        let mut dir = Cholesky::new(h).map(|ch| -ch.solve(&g));
        if let Some(d) = &dir {
            if !(g.dot(d) < 0.0) || d.iter().any(|v| !v.is_finite()) {
                dir = None;
            }
        }
        let d = dir.unwrap_or_else(|| -&g);
        let slope = g.dot(&d);
        let mut step = 1.0;
        let mut moved = false;
        while step > 1e-18 {
            let trial = clamp(x.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect());
            let ft = value(p, &trial);
            if ft <= f + 1e-4 * step * slope && ft < f {
                x = trial;
                fx = ft;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (x, fx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalMinimum {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Multistart descent from the origin, the all-ones point and seeded random
/// points in `[−2, 2]ⁿ`, sorted by value.
pub fn local_minima(p: &SparsePolynomial, config: &OptConfig) -> Vec<LocalMinimum> {
    let n = p.n();
    let mut starts = vec![vec![0.0; n], vec![1.0; n]];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.random_starts {
        starts.push((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
    }
    let mut out: Vec<LocalMinimum> = starts
        .into_iter()
        .map(|s| {
            let (x, value) = descend(p, s);
            LocalMinimum { x, value }
        })
        .collect();
    out.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| a.x.iter().zip(&b.x).map(|(u, v)| u.total_cmp(v)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
    });
    out
}

// ---------------------------------------------------------------------------
// primal bound

fn bound_catalog(p: &SparsePolynomial) -> Result<(SupportSet, CircuitCatalog), OptError> {
    let support = extended_support(p);
    let catalog = enumerate_circuits(&support)?;
    Ok((support, catalog))
}

struct PrimalRun {
    p_sonc: f64,
    certificate: Option<SoncCertificate>,
    trace: Vec<(f64, bool)>,
}

fn feasible_at(
    p: &SparsePolynomial,
    catalog: &CircuitCatalog,
    gamma: f64,
    config: &OptConfig,
    trace: &mut Vec<(f64, bool)>,
) -> Result<Option<SoncCertificate>, OptError> {
    let q = p.shift_constant(gamma);
    let cert = sonc_feasibility_with(&q, catalog, config)?.map(|mut c| {
        c.gamma = gamma;
        c
    });
    trace.push((gamma, cert.is_some()));
    Ok(cert)
}

fn primal(
    p: &SparsePolynomial,
    catalog: &CircuitCatalog,
    upper: f64,
    config: &OptConfig,
) -> Result<PrimalRun, OptError> {
    let scale = coefficient_scale(p);
    let mut trace = Vec::new();
    if let Some(cert) = feasible_at(p, catalog, upper, config, &mut trace)? {
        return Ok(PrimalRun {
            p_sonc: upper,
            certificate: Some(cert),
            trace,
        });
    }
    let mut hi = upper;
    let mut found = None;
    for k in 0..config.bisection_iterations {
        let gamma = upper - scale * 2f64.powi(k as i32);
        if let Some(cert) = feasible_at(p, catalog, gamma, config, &mut trace)? {
            found = Some((gamma, cert));
            break;
        }
        hi = gamma;
    }
    let Some((mut lo, mut best)) = found else {
        return Ok(PrimalRun {
            p_sonc: f64::NEG_INFINITY,
            certificate: None,
            trace,
        });
    };
    for _ in 0..config.bisection_iterations {
        if hi - lo <= config.gap_tol * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match feasible_at(p, catalog, mid, config, &mut trace)? {
            Some(cert) => {
                lo = mid;
                best = cert;
            }
            None => hi = mid,
        }
    }
    Ok(PrimalRun {
        p_sonc: lo,
        certificate: Some(best),
        trace,
    })
}

/// `sup γ` such that `p − γ` has a verified SONC certificate over `supp(p) ∪ {0}`.
pub fn sonc_lower_bound(p: &SparsePolynomial) -> Result<BoundResult, OptError> {
    sonc_lower_bound_with(p, &OptConfig::default())
}

pub fn sonc_lower_bound_with(p: &SparsePolynomial, config: &OptConfig) -> Result<BoundResult, OptError> {
    let (support, catalog) = bound_catalog(p)?;
    let minima = local_minima(p, config);
    let best = &minima[0];
    let run = primal(p, &catalog, best.value, config)?;
    let dual_point = moment_vector(&best.x, &support)?;
    let status = if run.certificate.is_some() {
        BoundStatus::Certified
    } else {
        BoundStatus::InfeasibleUnbounded
    };
    Ok(BoundResult {
        p_sonc: run.p_sonc,
        p_dual: best.value,
        certificate: run.certificate,
        dual_point: Some(dual_point),
        optimal_point: None,
        status,
        trace: run.trace,
    })
}

// ---------------------------------------------------------------------------
// dual program

/// Minimizes `Σ c_α v_α` over the dual SONC cone with `v₀ = 1`.
///
/// Candidates are moment vectors of local minimizers of `p`, refined by a
/// coordinate search that only accepts points passing the membership test.
pub fn dual_program_solve(p: &SparsePolynomial) -> Result<(f64, DualVector), OptError> {
    dual_program_solve_with(p, &OptConfig::default())
}

pub fn dual_program_solve_with(
    p: &SparsePolynomial,
    config: &OptConfig,
) -> Result<(f64, DualVector), OptError> {
    let (support, catalog) = bound_catalog(p)?;
    let minima = local_minima(p, config);
    dual_from_minima(p, &support, &catalog, &minima, config)
}

fn objective(p: &SparsePolynomial, v: &[f64], support: &SupportSet) -> f64 {
    support
        .points()
        .iter()
        .zip(v)
        .map(|(e, x)| p.coefficient(e) * x)
        .sum()
}

fn dual_member(catalog: &CircuitCatalog, v: &DualVector, tol: f64) -> Result<bool, OptError> {
    Ok(sonc_dual_membership_with_catalog(catalog, v, &DualConfig::with_tol(tol))?.member)
}

fn dual_from_minima(
    p: &SparsePolynomial,
    support: &SupportSet,
    catalog: &CircuitCatalog,
    minima: &[LocalMinimum],
    config: &OptConfig,
) -> Result<(f64, DualVector), OptError> {
    let scale = coefficient_scale(p);
    let mut best: Option<(f64, DualVector)> = None;
    let mut best_any: Option<(f64, DualVector)> = None;
    for m in minima {
        let v = moment_vector(&m.x, support)?;
        let val = objective(p, v.values(), support);
        if best_any.as_ref().map_or(true, |(b, _)| val < *b) {
            best_any = Some((val, v.clone()));
        }
        if best.as_ref().map_or(false, |(b, _)| val >= *b) {
            continue;
        }
        if dual_member(catalog, &v, 1e-7)? {
            best = Some((val, v));
        }
    }
    let Some((moment_value, moment_v)) = best else {
        return Err(OptError::NonConvergence {
            best_value: best_any.as_ref().map(|b| b.0),
            best: best_any.map(|b| b.1),
        });
    };

    // coordinate search away from the best moment vector
    let zero = support.index_of(&ExponentVector::zeros(support.n()));
    let mut v = moment_v.values().to_vec();
    let mut cur = moment_value;
    let coords: Vec<usize> = (0..v.len())
        .filter(|&i| Some(i) != zero && p.coefficient(&support.points()[i]) != 0.0)
        .collect();
    let mut steps: Vec<f64> = coords.iter().map(|&i| 0.1 * v[i].abs().max(1e-2)).collect();
    let mut queries = 0;
    'search: while queries < config.dual_budget {
        let mut any = false;
        for (k, &i) in coords.iter().enumerate() {
            if steps[k] < 1e-10 {
                continue;
            }
            any = true;
            let dir = -p.coefficient(&support.points()[i]).signum();
            let mut trial = v.clone();
            trial[i] += dir * steps[k];
            let tv = objective(p, &trial, support);
            queries += 1;
            let candidate = DualVector::new(support.clone(), trial.clone())?;
            // the relative membership tolerance grows with ‖v‖, so keep even coordinates exact
            let sign_ok = trial[i] >= 0.0 || !support.points()[i].is_even();
            if sign_ok && tv < cur - 1e-12 * scale && dual_member(catalog, &candidate, 1e-12)? {
                v = trial;
                cur = tv;
                steps[k] *= 2.0;
            } else {
                steps[k] *= 0.5;
            }
            if queries >= config.dual_budget {
                break 'search;
            }
        }
        if !any {
            break;
        }
    }
    let searched = DualVector::new(support.clone(), v)?;
    if cur < moment_value - 1e-7 * scale && dual_member(catalog, &searched, 1e-7)? {
        Ok((cur, searched))
    } else {
        Ok((moment_value, moment_v))
    }
}

// ---------------------------------------------------------------------------
// optimizer recovery

/// Recovers `z` with `v_α = v₀·z^α` for all `α ∈ A`, preferring nonnegative
/// signs; `None` if some coordinate is undetermined or verification fails.
pub fn recover_optimizer(v: &DualVector, support: &SupportSet) -> Option<Vec<f64>> {
    if v.support() != support {
        return None;
    }
    let n = support.n();
    let v0 = v.get(&ExponentVector::zeros(n))?;
    if !(v0 > 0.0) {
        return None;
    }
    let mut mag = vec![0.0; n];
    for i in 0..n {
        let used = support.points().iter().any(|a| a.entries()[i] > 0);
        if !used {
            continue;
        }
        if let Some(x) = v.get(&ExponentVector::unit(n, i, 2)) {
            mag[i] = (x.max(0.0) / v0).sqrt();
            continue;
        }
        let mut found = None;
        'pairs: for (a, va) in v.iter() {
            if va == 0.0 {
                continue;
            }
            for (b, vb) in v.iter() {
                let mut d = 0;
                let mut only_i = true;
                for k in 0..n {
                    let (x, y) = (a.entries()[k], b.entries()[k]);
                    if k == i {
                        if y <= x {
                            only_i = false;
                            break;
                        }
                        d = y - x;
                    } else if x != y {
                        only_i = false;
                        break;
                    }
                }
                if only_i {
                    found = Some((vb / va).abs().powf(1.0 / d as f64));
                    break 'pairs;
                }
            }
        }
        mag[i] = found?;
    }
    let free: Vec<usize> = (0..n).filter(|&i| mag[i] != 0.0).collect();
    if free.len() > 20 {
        return None;
    }
    for pattern in 0u32..(1u32 << free.len()) {
        let mut z = mag.clone();
        for (bit, &i) in free.iter().enumerate() {
            if pattern >> bit & 1 == 1 {
                z[i] = -z[i];
            }
        }
        let ok = v.iter().all(|(a, va)| {
            let want = v0 * a.monomial(&z);
            (va - want).abs() <= 1e-6 * va.abs().max(want.abs()).max(1.0)
        });
        if ok {
            return Some(z);
        }
    }
    None
}

/// Primal bound, dual program and the moment-recovery optimality test.
pub fn certify_optimality(p: &SparsePolynomial) -> Result<BoundResult, OptError> {
    certify_optimality_with(p, &OptConfig::default())
}

pub fn certify_optimality_with(p: &SparsePolynomial, config: &OptConfig) -> Result<BoundResult, OptError> {
    let (support, catalog) = bound_catalog(p)?;
    let scale = coefficient_scale(p);
    let minima = local_minima(p, config);
    let run = primal(p, &catalog, minima[0].value, config)?;
    let (p_dual, v) = match dual_from_minima(p, &support, &catalog, &minima, config) {
        Ok((val, v)) => (val, Some(v)),
        Err(OptError::NonConvergence { .. }) => (f64::NAN, None),
        Err(e) => return Err(e),
    };
    let mut status = if run.certificate.is_some() {
        BoundStatus::Certified
    } else {
        BoundStatus::InfeasibleUnbounded
    };
    let mut optimal_point = None;
    if run.certificate.is_some() {
        if let Some(z) = v.as_ref().and_then(|v| recover_optimizer(v, &support)) {
            let pz = value(p, &z);
            if (pz - p_dual).abs() <= 1e-6 * scale && p_dual - run.p_sonc <= 1e-6 * scale {
                status = BoundStatus::OptimalityCertified;
                optimal_point = Some(z);
            }
        }
    }
    Ok(BoundResult {
        p_sonc: run.p_sonc,
        p_dual,
        certificate: run.certificate,
        dual_point: v,
        optimal_point,
        status,
        trace: run.trace,
    })
}
